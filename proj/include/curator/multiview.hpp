#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "curator/error.hpp"
#include "curator/query_discovery.hpp"

namespace curator {

enum class KernelKind { Linear, Rbf };

struct ViewKernel {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;  // rbf width, ignored for linear
};

double kernel_eval(const ViewKernel& k, double a, double b);

struct Standardizer {
  double mean = 0.0;
  double stddev = 1.0;
  double apply(double v) const { return (v - mean) / stddev; }
};

struct LabeledPoint {
  double v1 = 0.0;  // semantic view
  double v2 = 0.0;  // visual view
  int label = 1;    // +1 / -1
};

/// Two kernel expansions over the same l+u inputs, trained jointly so the
/// views agree on the unlabeled block. Points are stored standardized.
struct CoRegModel {
  std::vector<double> points1, points2;
  std::vector<double> alpha1, alpha2;
  ViewKernel kernel1, kernel2;
  double gamma1 = 0.0, gamma2 = 0.0, lambda = 0.0;
  std::size_t labeled_count = 0, unlabeled_count = 0;
  Standardizer std1, std2;
};

// Minimizes
//   (1/2l) sum_labeled ([f1-y]^2 + [f2-y]^2)
//   + gamma1*|f1|^2 + gamma2*|f2|^2
//   + lambda * sum_unlabeled [f1 - f2]^2
// over kernel expansions on all l+u points, via the stationarity system.
CoRegModel train_coreg(std::span<const LabeledPoint> labeled,
                       std::span<const std::pair<double, double>> unlabeled, ViewKernel k1,
                       ViewKernel k2, double gamma1, double gamma2, double lambda);

// Averaged two-view decision value on a raw (v1, v2) point.
double predict_coreg(const CoRegModel& model, double v1, double v2);

// Rejects pending candidates whose decision value is <= threshold, accepts
// the rest. Candidates missing either distance are annotated "missing-view"
// and left pending.
void relevance_filter(const CoRegModel& model, std::vector<CandidateQuery>& candidates,
                      double decision_threshold = 0.0);

struct LabeledQuery {
  std::string phrase;
  double semantic_distance = 0.0;
  double visual_distance = 0.0;
  int label = 1;
};

// CSV: phrase,semantic_distance,visual_distance,label
std::vector<LabeledQuery> load_labeled_queries(const std::filesystem::path& path);

void save_coreg_model(const CoRegModel& model, const std::filesystem::path& path);
CoRegModel load_coreg_model(const std::filesystem::path& path);

}  // namespace curator
