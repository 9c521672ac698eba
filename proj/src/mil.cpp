#include "curator/mil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace curator {

using nlohmann::json;

BagView make_view(const Dataset& dataset, const Bag& bag) {
  BagView view;
  view.bag = &bag;
  view.rows.reserve(bag.instances.size());
  for (const auto& iid : bag.instances) view.rows.push_back(&dataset.instance(iid).features);
  return view;
}

namespace {

double squared_distance(const FeatureVec& a, const FeatureVec& b) {
  if (a.size() != b.size())
    fail(ErrorKind::Parameter, "dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                   std::to_string(b.size()));
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d2 += diff * diff;
  }
  return d2;
}

}  // namespace

double instance_similarity(const FeatureVec& concept_point, const FeatureVec& x, double sigma) {
  return std::exp(-squared_distance(concept_point, x) / (sigma * sigma));
}

double bag_similarity(const FeatureVec& concept_point, const BagView& bag, double sigma) {
  if (bag.rows.empty()) fail(ErrorKind::Parameter, "bag '" + bag.bag->id + "' is empty");
  if (!(sigma > 0)) fail(ErrorKind::Parameter, "sigma must be positive");
  double min_d2 = std::numeric_limits<double>::infinity();
  for (const auto* row : bag.rows) min_d2 = std::min(min_d2, squared_distance(concept_point, *row));
  return std::exp(-min_d2 / (sigma * sigma));
}

std::vector<double> embed_bag(const BagView& bag, const EmbeddingConfig& config) {
  if (config.concepts.empty()) fail(ErrorKind::Parameter, "embedding has no concepts");
  std::vector<double> m;
  m.reserve(config.concepts.size());
  for (const auto& concept_point : config.concepts) m.push_back(bag_similarity(concept_point, bag, config.sigma));
  return m;
}

std::vector<std::vector<double>> embed_all(std::span<const BagView> bags,
                                           const EmbeddingConfig& config) {
  std::vector<std::vector<double>> columns;
  columns.reserve(bags.size());
  for (const auto& bag : bags) columns.push_back(embed_bag(bag, config));
  return columns;
}

LinearProgram build_lp(std::span<const std::vector<double>> pos_embeddings,
                       std::span<const std::vector<double>> neg_embeddings, double lambda,
                       double delta) {
  if (pos_embeddings.empty() || neg_embeddings.empty())
    fail(ErrorKind::Training, "need at least one bag of each class");
  if (!(lambda > 0)) fail(ErrorKind::Parameter, "lambda must be positive");
  if (!(delta > 0 && delta < 1)) fail(ErrorKind::Parameter, "delta must lie in (0,1)");
  const std::size_t n = pos_embeddings.front().size();
  for (const auto& m : pos_embeddings)
    if (m.size() != n) fail(ErrorKind::Parameter, "embedding length mismatch");
  for (const auto& m : neg_embeddings)
    if (m.size() != n) fail(ErrorKind::Parameter, "embedding length mismatch");

  const std::size_t lp_pos = pos_embeddings.size();
  const std::size_t lp_neg = neg_embeddings.size();
  const std::size_t nvars = 2 * n + 1 + lp_pos + lp_neg;
  const std::size_t bias_col = 2 * n;
  const std::size_t eps0 = 2 * n + 1;
  const std::size_t eta0 = eps0 + lp_pos;

  LinearProgram lp;
  lp.objective.assign(nvars, 0.0);
  for (std::size_t k = 0; k < 2 * n; ++k) lp.objective[k] = lambda;
  for (std::size_t i = 0; i < lp_pos; ++i) lp.objective[eps0 + i] = delta;
  for (std::size_t j = 0; j < lp_neg; ++j) lp.objective[eta0 + j] = 1.0 - delta;

  lp.nonneg_mask.assign(nvars, true);
  lp.nonneg_mask[bias_col] = false;

  lp.constraint_matrix.reserve(lp_pos + lp_neg);
  lp.constraint_rhs.assign(lp_pos + lp_neg, 1.0);
  for (std::size_t i = 0; i < lp_pos; ++i) {
    std::vector<double> row(nvars, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      row[k] = pos_embeddings[i][k];
      row[n + k] = -pos_embeddings[i][k];
    }
    row[bias_col] = 1.0;
    row[eps0 + i] = 1.0;
    lp.constraint_matrix.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < lp_neg; ++j) {
    std::vector<double> row(nvars, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      row[k] = -neg_embeddings[j][k];
      row[n + k] = neg_embeddings[j][k];
    }
    row[bias_col] = -1.0;
    row[eta0 + j] = 1.0;
    lp.constraint_matrix.push_back(std::move(row));
  }
  return lp;
}

double mean_pairwise_distance(std::span<const FeatureVec> points) {
  if (points.size() < 2) fail(ErrorKind::Parameter, "need at least two points");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      sum += std::sqrt(squared_distance(points[i], points[j]));
      ++count;
    }
  return sum / static_cast<double>(count);
}

BagClassifier train_bag_classifier(const Dataset& dataset, std::span<const Bag* const> pos_bags,
                                   std::span<const Bag* const> neg_bags, const MilParams& params) {
  if (pos_bags.empty() || neg_bags.empty())
    fail(ErrorKind::Training, "need at least one bag of each class");

  // Line up all training instances, positives first, as the concept list.
  std::vector<FeatureVec> concepts;
  std::vector<BagView> pos_views, neg_views;
  for (const Bag* bag : pos_bags) {
    pos_views.push_back(make_view(dataset, *bag));
    for (const auto* row : pos_views.back().rows) concepts.push_back(*row);
  }
  for (const Bag* bag : neg_bags) {
    neg_views.push_back(make_view(dataset, *bag));
    for (const auto* row : neg_views.back().rows) concepts.push_back(*row);
  }

  BagClassifier classifier;
  classifier.lambda = params.lambda;
  classifier.delta = params.delta;
  classifier.config.sigma = params.sigma > 0 ? params.sigma : mean_pairwise_distance(concepts);
  classifier.config.concepts = std::move(concepts);

  const auto pos_emb = embed_all(pos_views, classifier.config);
  const auto neg_emb = embed_all(neg_views, classifier.config);
  const LinearProgram lp = build_lp(pos_emb, neg_emb, params.lambda, params.delta);
  const LpSolution sol = solve(lp);
  if (sol.status != LpStatus::Optimal)
    fail(ErrorKind::Numerical, sol.status == LpStatus::Infeasible
                                   ? "bag classifier LP reported infeasible"
                                   : "bag classifier LP reported unbounded");

  const std::size_t n = classifier.config.concepts.size();
  classifier.weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) classifier.weights[k] = sol.point[k] - sol.point[n + k];
  classifier.bias = sol.point[2 * n];
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(classifier.weights[k]) > kWeightEpsilon) classifier.selected.push_back(k);
  return classifier;
}

BagDecision classify_bag(const BagClassifier& classifier, const Dataset& dataset, const Bag& bag) {
  if (bag.instances.empty()) fail(ErrorKind::Parameter, "bag '" + bag.id + "' is empty");
  const BagView view = make_view(dataset, bag);
  double score = classifier.bias;
  for (std::size_t k : classifier.selected)
    score += classifier.weights[k] *
             bag_similarity(classifier.config.concepts[k], view, classifier.config.sigma);
  return {score >= 0.0 ? 1 : -1, score};
}

BagPartition prune_bags(const BagClassifier& classifier, const Dataset& dataset,
                        std::span<const Bag* const> candidates) {
  BagPartition partition;
  for (const Bag* bag : candidates) {
    if (classify_bag(classifier, dataset, *bag).label > 0)
      partition.kept.push_back(bag->id);
    else
      partition.rejected.push_back(bag->id);
  }
  return partition;
}

void save_bag_classifier(const BagClassifier& classifier, const std::filesystem::path& path) {
  json doc;
  doc["sigma"] = classifier.config.sigma;
  doc["lambda"] = classifier.lambda;
  doc["delta"] = classifier.delta;
  doc["bias"] = classifier.bias;
  doc["selected"] = json::array();
  for (std::size_t k : classifier.selected) {
    json entry;
    entry["index"] = k;
    entry["weight"] = classifier.weights[k];
    entry["concept"] = classifier.config.concepts[k];
    doc["selected"].push_back(std::move(entry));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write classifier file '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

BagClassifier load_bag_classifier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open classifier file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "classifier file '" + path.string() + "': " + e.what());
  }
  BagClassifier classifier;
  classifier.config.sigma = doc.at("sigma").get<double>();
  classifier.lambda = doc.at("lambda").get<double>();
  classifier.delta = doc.at("delta").get<double>();
  classifier.bias = doc.at("bias").get<double>();
  // Stored concepts are re-indexed densely; classification is unchanged.
  for (const auto& entry : doc.at("selected")) {
    classifier.selected.push_back(classifier.config.concepts.size());
    classifier.config.concepts.push_back(entry.at("concept").get<FeatureVec>());
    classifier.weights.push_back(entry.at("weight").get<double>());
  }
  return classifier;
}

}  // namespace curator
