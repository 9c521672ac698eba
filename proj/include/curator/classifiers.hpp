#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "curator/core.hpp"
#include "curator/error.hpp"
#include "curator/query_discovery.hpp"

namespace curator {

/// Linear decision function w.x + b, fit by regularized least squares on
/// +1/-1 targets: (1/m) sum (w.x_i + b - y_i)^2 + reg*|w|^2, bias free.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  bool low_margin = false;  // every training score within 1e-6 of zero
};

/// Kernel expansion sum_i c_i exp(-gamma*|x - p_i|^2) + b, fit by kernel
/// regularized least squares: (1/m)|Kc + b1 - y|^2 + reg*c'Kc, 1'c = 0.
struct KernelModel {
  std::vector<FeatureVec> support_points;
  std::vector<double> coefficients;
  double bias = 0.0;
  double gamma = 1.0;
};

LinearModel train_linear(std::span<const FeatureVec> positives,
                         std::span<const FeatureVec> negatives, double reg);
KernelModel train_kernel_rbf(std::span<const FeatureVec> positives,
                             std::span<const FeatureVec> negatives, double gamma, double reg);

double predict(const LinearModel& model, std::span<const double> x);
double predict(const KernelModel& model, std::span<const double> x);

// Fraction of pooled validation items whose score sign matches their class.
// Scores of exactly zero count as +1.
double salience_score(std::span<const FeatureVec> train_pos, std::span<const FeatureVec> train_neg,
                      std::span<const FeatureVec> val_pos, std::span<const FeatureVec> val_neg,
                      double reg);

struct SalienceSplit {
  std::size_t train_pos = 75;
  std::size_t val_pos = 25;
  std::size_t train_neg = 25;
  std::size_t val_neg = 25;

  std::size_t required_images() const { return train_pos + val_pos; }
};

// Scores every pending candidate against its bag images (bags are matched by
// query_text == phrase, images taken in manifest order) and rejects those
// below `threshold`. Candidates with too few images score 0 and are rejected
// with note "too-few-images".
void salience_filter(std::vector<CandidateQuery>& candidates, const Dataset& images,
                     std::span<const FeatureVec> negative_pool, double threshold,
                     const SalienceSplit& split = {}, double reg = 1e-3);

// visual_distance = mean over the candidate's images of 1/(1+exp(score))
// under the target's own classifier; near 0 for target-like image sets.
void visual_distance_graph(const LinearModel& center_model,
                           std::vector<CandidateQuery>& candidates, const Dataset& images);

void save_linear_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_linear_model(const std::filesystem::path& path);
void save_kernel_model(const KernelModel& model, const std::filesystem::path& path);
KernelModel load_kernel_model(const std::filesystem::path& path);

}  // namespace curator
