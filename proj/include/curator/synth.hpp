#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>

#include "curator/core.hpp"

namespace curator {

struct SynthParams {
  int categories = 3;
  int bags_per_category = 20;
  int instances_per_bag = 30;
  int dimensionality = 10;
  double noisy_bag_fraction = 0.2;   // planted off-center bags, floor rounding
  double intra_noise_fraction = 0.1; // planted foreign instances per clean bag
  double cluster_separation = 8.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct GroundTruth {
  std::set<std::string> noisy_bags;
  std::set<std::string> noisy_instances;
};

// Clean bags are unit Gaussians at their category center; noisy bags sit at
// a random offset of length cluster_separation; clean bags additionally get
// floor(intra_noise_fraction * instances_per_bag) instances redrawn from
// other categories. Fully determined by the seed.
std::pair<Dataset, GroundTruth> synth_generate(const SynthParams& params);

// Category index encoded in the generated bag ids.
int synth_bag_category(const std::string& bag_id);

struct LevelMetrics {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

struct Metrics {
  LevelMetrics bag;
  LevelMetrics instance;
};

// Precision of an empty prediction is 1; recall against empty truth is 1;
// F1 is the harmonic mean, or 0 when either factor is 0.
Metrics evaluate(const Dataset& dataset, const std::set<std::string>& removed_bags,
                 const std::set<std::string>& removed_instances, const GroundTruth& truth);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace curator
