#include "curator/multiview.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "json.hpp"

namespace curator {

using nlohmann::json;

double kernel_eval(const ViewKernel& k, double a, double b) {
  if (k.kind == KernelKind::Linear) return a * b;
  const double d = a - b;
  return std::exp(-k.gamma * d * d);
}

namespace {

Eigen::MatrixXd gram(const ViewKernel& k, const std::vector<double>& pts) {
  const auto m = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(k, pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

Standardizer fit_standardizer(const std::vector<double>& values) {
  Standardizer s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  var /= static_cast<double>(values.size());
  s.stddev = std::sqrt(var);
  if (s.stddev < 1e-12) s.stddev = 1.0;  // constant view
  return s;
}

}  // namespace

CoRegModel train_coreg(std::span<const LabeledPoint> labeled,
                       std::span<const std::pair<double, double>> unlabeled, ViewKernel k1,
                       ViewKernel k2, double gamma1, double gamma2, double lambda) {
  if (labeled.empty()) fail(ErrorKind::Training, "need at least one labeled point");
  if (!(gamma1 > 0) || !(gamma2 > 0))
    fail(ErrorKind::Parameter, "view regularizers gamma1, gamma2 must be positive");
  if (lambda < 0) fail(ErrorKind::Parameter, "lambda must be nonnegative");
  if (k1.kind == KernelKind::Rbf && !(k1.gamma > 0))
    fail(ErrorKind::Parameter, "rbf kernel width must be positive");
  if (k2.kind == KernelKind::Rbf && !(k2.gamma > 0))
    fail(ErrorKind::Parameter, "rbf kernel width must be positive");
  for (const auto& p : labeled)
    if (p.label != 1 && p.label != -1) fail(ErrorKind::Training, "labels must be +1 or -1");

  const std::size_t l = labeled.size();
  const std::size_t u = unlabeled.size();
  const std::size_t m = l + u;

  CoRegModel model;
  model.kernel1 = k1;
  model.kernel2 = k2;
  model.gamma1 = gamma1;
  model.gamma2 = gamma2;
  model.lambda = lambda;
  model.labeled_count = l;
  model.unlabeled_count = u;

  std::vector<double> raw1, raw2;
  raw1.reserve(m);
  raw2.reserve(m);
  for (const auto& p : labeled) {
    raw1.push_back(p.v1);
    raw2.push_back(p.v2);
  }
  for (const auto& p : unlabeled) {
    raw1.push_back(p.first);
    raw2.push_back(p.second);
  }
  model.std1 = fit_standardizer(raw1);
  model.std2 = fit_standardizer(raw2);
  model.points1.reserve(m);
  model.points2.reserve(m);
  for (double v : raw1) model.points1.push_back(model.std1.apply(v));
  for (double v : raw2) model.points2.push_back(model.std2.apply(v));

  const Eigen::MatrixXd g1 = gram(k1, model.points1);
  const Eigen::MatrixXd g2 = gram(k2, model.points2);
  const auto mi = static_cast<Eigen::Index>(m);
  const auto li = static_cast<Eigen::Index>(l);
  const double inv_l = 1.0 / static_cast<double>(l);

  // Stationarity of the objective under f_k = K_k alpha_k, with the leading
  // Gram factor cancelled; any solution of this inner system zeroes the
  // full gradient.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * mi, 2 * mi);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * mi);
  for (Eigen::Index i = 0; i < mi; ++i) {
    const bool is_labeled = i < li;
    if (is_labeled) {
      a.row(i).head(mi) += inv_l * g1.row(i);
      a.row(mi + i).tail(mi) += inv_l * g2.row(i);
      const double y = static_cast<double>(labeled[static_cast<std::size_t>(i)].label);
      rhs(i) = inv_l * y;
      rhs(mi + i) = inv_l * y;
    } else {
      a.row(i).head(mi) += 2.0 * lambda * g1.row(i);
      a.row(i).tail(mi) -= 2.0 * lambda * g2.row(i);
      a.row(mi + i).tail(mi) += 2.0 * lambda * g2.row(i);
      a.row(mi + i).head(mi) -= 2.0 * lambda * g1.row(i);
    }
    a(i, i) += 2.0 * gamma1;
    a(mi + i, mi + i) += 2.0 * gamma2;
  }

  const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
  const double residual = (a * sol - rhs).norm();
  if (!sol.allFinite() || residual > 1e-6 * (1.0 + rhs.norm())) {
    std::ostringstream msg;
    msg << "co-regularization system is numerically singular (residual " << residual
        << ", l=" << l << ", u=" << u << ", gamma1=" << gamma1 << ", gamma2=" << gamma2 << ")";
    fail(ErrorKind::Numerical, msg.str());
  }

  model.alpha1.assign(sol.data(), sol.data() + mi);
  model.alpha2.assign(sol.data() + mi, sol.data() + 2 * mi);
  return model;
}

namespace {

double view_value(const ViewKernel& k, const std::vector<double>& pts,
                  const std::vector<double>& alpha, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) s += alpha[j] * kernel_eval(k, pts[j], x);
  return s;
}

}  // namespace

double predict_coreg(const CoRegModel& model, double v1, double v2) {
  const double f1 = view_value(model.kernel1, model.points1, model.alpha1, model.std1.apply(v1));
  const double f2 = view_value(model.kernel2, model.points2, model.alpha2, model.std2.apply(v2));
  return 0.5 * (f1 + f2);
}

void relevance_filter(const CoRegModel& model, std::vector<CandidateQuery>& candidates,
                      double decision_threshold) {
  for (auto& cand : candidates) {
    if (cand.verdict != Verdict::Pending) continue;
    if (!cand.semantic_distance || !cand.visual_distance) {
      if (!cand.note.empty()) cand.note += ";";
      cand.note += "missing-view";
      continue;
    }
    const double j = predict_coreg(model, *cand.semantic_distance, *cand.visual_distance);
    apply_verdict(cand, j <= decision_threshold ? Verdict::RejectedIrrelevant : Verdict::Accepted);
  }
}

std::vector<LabeledQuery> load_labeled_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open labeled-query file '" + path.string() + "'");
  std::vector<LabeledQuery> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row == 1 && line.rfind("phrase", 0) == 0) continue;  // optional header
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4)
      fail(ErrorKind::Format, "labeled-query row " + std::to_string(row) + ": expected 4 fields");
    LabeledQuery q;
    q.phrase = fields[0];
    try {
      q.semantic_distance = std::stod(fields[1]);
      q.visual_distance = std::stod(fields[2]);
      q.label = std::stoi(fields[3]);
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "labeled-query row " + std::to_string(row) + ": bad numeric field");
    }
    if (q.label != 1 && q.label != -1)
      fail(ErrorKind::Format, "labeled-query row " + std::to_string(row) + ": label must be +1/-1");
    out.push_back(std::move(q));
  }
  if (out.empty()) fail(ErrorKind::Format, "labeled-query file '" + path.string() + "' is empty");
  return out;
}

namespace {

json kernel_to_json(const ViewKernel& k) {
  return {{"kind", k.kind == KernelKind::Linear ? "linear" : "rbf"}, {"gamma", k.gamma}};
}

ViewKernel kernel_from_json(const json& j) {
  ViewKernel k;
  k.kind = j.at("kind") == "linear" ? KernelKind::Linear : KernelKind::Rbf;
  k.gamma = j.at("gamma").get<double>();
  return k;
}

}  // namespace

void save_coreg_model(const CoRegModel& model, const std::filesystem::path& path) {
  json doc;
  doc["points1"] = model.points1;
  doc["points2"] = model.points2;
  doc["alpha1"] = model.alpha1;
  doc["alpha2"] = model.alpha2;
  doc["kernel1"] = kernel_to_json(model.kernel1);
  doc["kernel2"] = kernel_to_json(model.kernel2);
  doc["gamma1"] = model.gamma1;
  doc["gamma2"] = model.gamma2;
  doc["lambda"] = model.lambda;
  doc["labeled_count"] = model.labeled_count;
  doc["unlabeled_count"] = model.unlabeled_count;
  doc["standardize"] = {{"mean1", model.std1.mean},
                        {"stddev1", model.std1.stddev},
                        {"mean2", model.std2.mean},
                        {"stddev2", model.std2.stddev}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write model file '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

CoRegModel load_coreg_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open model file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "model file '" + path.string() + "': " + e.what());
  }
  CoRegModel model;
  model.points1 = doc.at("points1").get<std::vector<double>>();
  model.points2 = doc.at("points2").get<std::vector<double>>();
  model.alpha1 = doc.at("alpha1").get<std::vector<double>>();
  model.alpha2 = doc.at("alpha2").get<std::vector<double>>();
  model.kernel1 = kernel_from_json(doc.at("kernel1"));
  model.kernel2 = kernel_from_json(doc.at("kernel2"));
  model.gamma1 = doc.at("gamma1").get<double>();
  model.gamma2 = doc.at("gamma2").get<double>();
  model.lambda = doc.at("lambda").get<double>();
  model.labeled_count = doc.at("labeled_count").get<std::size_t>();
  model.unlabeled_count = doc.at("unlabeled_count").get<std::size_t>();
  model.std1 = {doc.at("standardize").at("mean1").get<double>(),
                doc.at("standardize").at("stddev1").get<double>()};
  model.std2 = {doc.at("standardize").at("mean2").get<double>(),
                doc.at("standardize").at("stddev2").get<double>()};
  return model;
}

}  // namespace curator
