#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curator/core.hpp"
#include "curator/mil.hpp"

namespace curator {

struct InstanceVerdict {
  std::string instance_id;
  bool in_maximizer_set = false;
  std::optional<double> contribution;  // present iff in_maximizer_set
  bool kept = false;
};

// Within-bag indices that realize some selected concept's best similarity.
// Ties keep every maximizer. Empty when the classifier selected nothing.
std::vector<std::size_t> maximizer_index_set(const BagClassifier& classifier,
                                             const Dataset& dataset, const Bag& bag);

// Number of maximizers per selected concept (key = concept index).
std::map<std::size_t, std::size_t> maximizer_counts(const BagClassifier& classifier,
                                                    const Dataset& dataset, const Bag& bag);

// Contribution of instance j_star to the bag decision:
//   g = sum over concepts k that j_star maximizes of w_k * s(x^k, x_ij*) / nu_k.
double instance_contribution(const BagClassifier& classifier, const Dataset& dataset,
                             const Bag& bag, std::size_t j_star);

struct PruneResult {
  std::vector<std::string> kept;     // bag order
  std::vector<std::string> removed;  // bag order
  std::vector<InstanceVerdict> verdicts;
  double theta = 0.0;
  bool empty_maximizer_warning = false;
};

// Keeps instance j* iff it is a maximizer and g(x_ij*) > theta, strictly.
// theta defaults to -bias/|varphi|. Instances outside the maximizer set are
// removed; the verdicts record which removals carried a negative decision.
PruneResult prune_instances(const BagClassifier& classifier, const Dataset& dataset,
                            const Bag& bag, std::optional<double> theta = {});

void append_pruning_report(const std::filesystem::path& path, const std::string& bag_id,
                           const std::vector<InstanceVerdict>& verdicts);

}  // namespace curator
