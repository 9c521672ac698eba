#include "curator/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <Eigen/Dense>

#include "json.hpp"

namespace curator {

using nlohmann::json;

namespace {

void check_classes(std::span<const FeatureVec> pos, std::span<const FeatureVec> neg) {
  if (pos.empty() || neg.empty()) fail(ErrorKind::Training, "both classes must be non-empty");
  const std::size_t d = pos.front().size();
  for (const auto& v : pos)
    if (v.size() != d) fail(ErrorKind::Training, "inconsistent feature dimensionality");
  for (const auto& v : neg)
    if (v.size() != d) fail(ErrorKind::Training, "inconsistent feature dimensionality");
  if (d == 0) fail(ErrorKind::Training, "zero-dimensional features");
}

Eigen::MatrixXd stack(std::span<const FeatureVec> pos, std::span<const FeatureVec> neg) {
  const std::size_t m = pos.size() + neg.size();
  const std::size_t d = pos.front().size();
  Eigen::MatrixXd x(m, d);
  std::size_t r = 0;
  for (const auto& v : pos) x.row(static_cast<Eigen::Index>(r++)) = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(d));
  for (const auto& v : neg) x.row(static_cast<Eigen::Index>(r++)) = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(d));
  return x;
}

Eigen::VectorXd targets(std::size_t npos, std::size_t nneg) {
  Eigen::VectorXd y(npos + nneg);
  y.head(static_cast<Eigen::Index>(npos)).setConstant(1.0);
  y.tail(static_cast<Eigen::Index>(nneg)).setConstant(-1.0);
  return y;
}

int sign_of(double score) { return score >= 0.0 ? 1 : -1; }

}  // namespace

LinearModel train_linear(std::span<const FeatureVec> positives,
                         std::span<const FeatureVec> negatives, double reg) {
  check_classes(positives, negatives);
  if (!(reg > 0)) fail(ErrorKind::Parameter, "reg must be positive");

  const Eigen::MatrixXd x = stack(positives, negatives);
  const Eigen::VectorXd y = targets(positives.size(), negatives.size());
  const auto m = static_cast<double>(x.rows());
  const Eigen::Index d = x.cols();

  Eigen::MatrixXd a(d + 1, d + 1);
  a.topLeftCorner(d, d) = (x.transpose() * x) / m + reg * Eigen::MatrixXd::Identity(d, d);
  a.topRightCorner(d, 1) = x.colwise().sum().transpose() / m;
  a.bottomLeftCorner(1, d) = x.colwise().sum() / m;
  a(d, d) = 1.0;
  Eigen::VectorXd rhs(d + 1);
  rhs.head(d) = x.transpose() * y / m;
  rhs(d) = y.sum() / m;

  const Eigen::VectorXd beta = a.ldlt().solve(rhs);

  LinearModel model;
  model.weights.assign(beta.data(), beta.data() + d);
  model.bias = beta(d);
  const Eigen::VectorXd scores = x * beta.head(d) + Eigen::VectorXd::Constant(x.rows(), model.bias);
  model.low_margin = scores.cwiseAbs().maxCoeff() < 1e-6;
  return model;
}

KernelModel train_kernel_rbf(std::span<const FeatureVec> positives,
                             std::span<const FeatureVec> negatives, double gamma, double reg) {
  check_classes(positives, negatives);
  if (!(gamma > 0)) fail(ErrorKind::Parameter, "gamma must be positive");
  if (!(reg > 0)) fail(ErrorKind::Parameter, "reg must be positive");

  const Eigen::MatrixXd x = stack(positives, negatives);
  const Eigen::VectorXd y = targets(positives.size(), negatives.size());
  const Eigen::Index m = x.rows();

  Eigen::MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
      k(i, j) = v;
      k(j, i) = v;
    }

  // Saddle system: (K + reg*m*I) c + b 1 = y, 1'c = 0.
  Eigen::MatrixXd a(m + 1, m + 1);
  a.topLeftCorner(m, m) = k + reg * static_cast<double>(m) * Eigen::MatrixXd::Identity(m, m);
  a.topRightCorner(m, 1).setOnes();
  a.bottomLeftCorner(1, m).setOnes();
  a(m, m) = 0.0;
  Eigen::VectorXd rhs(m + 1);
  rhs.head(m) = y;
  rhs(m) = 0.0;

  const Eigen::VectorXd cb = a.partialPivLu().solve(rhs);

  KernelModel model;
  model.gamma = gamma;
  model.bias = cb(m);
  model.coefficients.assign(cb.data(), cb.data() + m);
  model.support_points.reserve(static_cast<std::size_t>(m));
  for (const auto& v : positives) model.support_points.push_back(v);
  for (const auto& v : negatives) model.support_points.push_back(v);
  return model;
}

double predict(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size())
    fail(ErrorKind::Parameter, "feature dimensionality mismatch: got " + std::to_string(x.size()) +
                                   ", model expects " + std::to_string(model.weights.size()));
  double s = model.bias;
  for (std::size_t i = 0; i < x.size(); ++i) s += model.weights[i] * x[i];
  return s;
}

double predict(const KernelModel& model, std::span<const double> x) {
  if (model.support_points.size() != model.coefficients.size())
    fail(ErrorKind::Parameter, "corrupt kernel model");
  double s = model.bias;
  for (std::size_t i = 0; i < model.support_points.size(); ++i) {
    const auto& p = model.support_points[i];
    if (p.size() != x.size())
      fail(ErrorKind::Parameter, "feature dimensionality mismatch: got " + std::to_string(x.size()) +
                                     ", model expects " + std::to_string(p.size()));
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - p[j];
      d2 += diff * diff;
    }
    s += model.coefficients[i] * std::exp(-model.gamma * d2);
  }
  return s;
}

double salience_score(std::span<const FeatureVec> train_pos, std::span<const FeatureVec> train_neg,
                      std::span<const FeatureVec> val_pos, std::span<const FeatureVec> val_neg,
                      double reg) {
  if (val_pos.empty() && val_neg.empty())
    fail(ErrorKind::Training, "validation pool is empty");
  const LinearModel model = train_linear(train_pos, train_neg, reg);
  std::size_t correct = 0;
  for (const auto& v : val_pos)
    if (sign_of(predict(model, v)) == 1) ++correct;
  for (const auto& v : val_neg)
    if (sign_of(predict(model, v)) == -1) ++correct;
  return static_cast<double>(correct) / static_cast<double>(val_pos.size() + val_neg.size());
}

namespace {

// Images for a phrase: all bags whose query_text matches, in bag-id order,
// instance order preserved.
std::vector<FeatureVec> phrase_images(const Dataset& images, const std::string& phrase) {
  std::vector<FeatureVec> out;
  for (const auto& [bag_id, bag] : images.bags) {
    if (bag.query_text != phrase) continue;
    for (const auto& iid : bag.instances) out.push_back(images.instance(iid).features);
  }
  return out;
}

void annotate(CandidateQuery& cand, const std::string& note) {
  if (!cand.note.empty()) cand.note += ";";
  cand.note += note;
}

}  // namespace

void salience_filter(std::vector<CandidateQuery>& candidates, const Dataset& images,
                     std::span<const FeatureVec> negative_pool, double threshold,
                     const SalienceSplit& split, double reg) {
  if (split.train_pos == 0 || split.val_pos == 0 || split.train_neg == 0 || split.val_neg == 0)
    fail(ErrorKind::Parameter, "salience split sizes must be positive");
  if (negative_pool.size() < split.train_neg + split.val_neg)
    fail(ErrorKind::Training,
         "negative pool has " + std::to_string(negative_pool.size()) + " items, need " +
             std::to_string(split.train_neg + split.val_neg));

  const std::vector<FeatureVec> neg_train(negative_pool.begin(),
                                          negative_pool.begin() + static_cast<long>(split.train_neg));
  const std::vector<FeatureVec> neg_val(
      negative_pool.begin() + static_cast<long>(split.train_neg),
      negative_pool.begin() + static_cast<long>(split.train_neg + split.val_neg));

  for (auto& cand : candidates) {
    if (cand.verdict != Verdict::Pending) continue;
    const auto imgs = phrase_images(images, cand.phrase);
    if (imgs.size() < split.required_images()) {
      cand.salience_score = 0.0;
      annotate(cand, "too-few-images");
      apply_verdict(cand, Verdict::RejectedNonSalient);
      continue;
    }
    const std::vector<FeatureVec> pos_train(imgs.begin(), imgs.begin() + static_cast<long>(split.train_pos));
    const std::vector<FeatureVec> pos_val(imgs.begin() + static_cast<long>(split.train_pos),
                                          imgs.begin() + static_cast<long>(split.required_images()));
    cand.salience_score = salience_score(pos_train, neg_train, pos_val, neg_val, reg);
    if (*cand.salience_score < threshold) apply_verdict(cand, Verdict::RejectedNonSalient);
  }
}

void visual_distance_graph(const LinearModel& center_model,
                           std::vector<CandidateQuery>& candidates, const Dataset& images) {
  for (auto& cand : candidates) {
    const auto imgs = phrase_images(images, cand.phrase);
    if (imgs.empty()) {
      annotate(cand, "no-images");
      continue;
    }
    double acc = 0.0;
    for (const auto& v : imgs) {
      const double score = predict(center_model, v);
      acc += 1.0 / (1.0 + std::exp(score));
    }
    cand.visual_distance = acc / static_cast<double>(imgs.size());
  }
}

void save_linear_model(const LinearModel& model, const std::filesystem::path& path) {
  json doc;
  doc["kind"] = "linear";
  doc["weights"] = model.weights;
  doc["bias"] = model.bias;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write model file '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

LinearModel load_linear_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open model file '" + path.string() + "'");
  json doc;
  in >> doc;
  if (doc.at("kind") != "linear") fail(ErrorKind::Format, "expected a linear model");
  LinearModel model;
  model.weights = doc.at("weights").get<std::vector<double>>();
  model.bias = doc.at("bias").get<double>();
  return model;
}

void save_kernel_model(const KernelModel& model, const std::filesystem::path& path) {
  json doc;
  doc["kind"] = "rbf";
  doc["coefficients"] = model.coefficients;
  doc["bias"] = model.bias;
  doc["gamma"] = model.gamma;
  doc["support_points"] = model.support_points;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write model file '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

KernelModel load_kernel_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open model file '" + path.string() + "'");
  json doc;
  in >> doc;
  if (doc.at("kind") != "rbf") fail(ErrorKind::Format, "expected an rbf model");
  KernelModel model;
  model.coefficients = doc.at("coefficients").get<std::vector<double>>();
  model.bias = doc.at("bias").get<double>();
  model.gamma = doc.at("gamma").get<double>();
  model.support_points = doc.at("support_points").get<std::vector<FeatureVec>>();
  return model;
}

}  // namespace curator
