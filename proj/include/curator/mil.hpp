#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "curator/core.hpp"
#include "curator/lp_solver.hpp"

namespace curator {

/// Concept list and similarity scale shared by embedding and classification.
struct EmbeddingConfig {
  double sigma = 1.0;
  std::vector<FeatureVec> concepts;  // the re-indexed training instances x^k
};

struct MilParams {
  double sigma = 0.0;    // <= 0 selects the mean pairwise training distance
  double lambda = 0.01;  // 1-norm penalty
  double delta = 0.5;    // false-negative cost; false-positive cost is 1-delta
};

/// Sparse bag classifier: score(B) = sum_{k in selected} weights[k]*s(x^k,B) + bias.
struct BagClassifier {
  EmbeddingConfig config;
  std::vector<double> weights;        // length = concepts, mostly zero
  double bias = 0.0;
  std::vector<std::size_t> selected;  // indices with |weight| > 1e-9, sorted
  double lambda = 0.0, delta = 0.0;
};

// Nonzero-weight threshold guarding accumulated pivot error; simplex leaves
// nonbasic variables at exact zero.
inline constexpr double kWeightEpsilon = 1e-9;

/// A bag with its feature rows resolved against a dataset.
struct BagView {
  const Bag* bag = nullptr;
  std::vector<const FeatureVec*> rows;
};

BagView make_view(const Dataset& dataset, const Bag& bag);

// Similarity of the closest bag instance, s = exp(-min_j |x_ij - x^k|^2 / sigma^2).
double bag_similarity(const FeatureVec& concept_point, const BagView& bag, double sigma);

// Point-to-point form of the same kernel.
double instance_similarity(const FeatureVec& concept_point, const FeatureVec& x, double sigma);

std::vector<double> embed_bag(const BagView& bag, const EmbeddingConfig& config);

// One column per bag, input order preserved.
std::vector<std::vector<double>> embed_all(std::span<const BagView> bags,
                                           const EmbeddingConfig& config);

// Variables ordered (u_1..u_n, v_1..v_n, b, eps_1..eps_p, eta_1..eta_q):
//   min lambda*sum(u+v) + delta*sum(eps) + (1-delta)*sum(eta)
//   s.t.  (u-v).m_i+ + b + eps_i >= 1        for positive bags
//        -((u-v).m_j- + b) + eta_j >= 1      for negative bags
//   u, v, eps, eta >= 0, b free.
LinearProgram build_lp(std::span<const std::vector<double>> pos_embeddings,
                       std::span<const std::vector<double>> neg_embeddings, double lambda,
                       double delta);

double mean_pairwise_distance(std::span<const FeatureVec> points);

BagClassifier train_bag_classifier(const Dataset& dataset, std::span<const Bag* const> pos_bags,
                                   std::span<const Bag* const> neg_bags, const MilParams& params);

struct BagDecision {
  int label = 1;       // sign(score), with sign(0) = +1
  double score = 0.0;
};

BagDecision classify_bag(const BagClassifier& classifier, const Dataset& dataset, const Bag& bag);

struct BagPartition {
  std::vector<std::string> kept;      // classified positive, input order
  std::vector<std::string> rejected;  // classified negative, input order
};

BagPartition prune_bags(const BagClassifier& classifier, const Dataset& dataset,
                        std::span<const Bag* const> candidates);

// Only selected concepts are stored; zero-weight concepts never contribute.
void save_bag_classifier(const BagClassifier& classifier, const std::filesystem::path& path);
BagClassifier load_bag_classifier(const std::filesystem::path& path);

}  // namespace curator
