#include "curator/instance_pruning.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

namespace curator {

namespace {

// Per-concept maximizer sets, computed once per (classifier, bag) pair.
struct MaximizerTable {
  // row per selected concept: the within-bag indices attaining its best
  // similarity, exact equality on computed values.
  std::vector<std::vector<std::size_t>> maximizers;  // parallel to classifier.selected
  std::vector<double> best_similarity;               // parallel to classifier.selected
};

MaximizerTable build_table(const BagClassifier& classifier, const Dataset& dataset,
                           const Bag& bag) {
  if (bag.instances.empty()) fail(ErrorKind::Parameter, "bag '" + bag.id + "' is empty");
  const BagView view = make_view(dataset, bag);
  MaximizerTable table;
  table.maximizers.resize(classifier.selected.size());
  table.best_similarity.resize(classifier.selected.size());
  for (std::size_t c = 0; c < classifier.selected.size(); ++c) {
    const auto& concept_point = classifier.config.concepts[classifier.selected[c]];
    double best = -1.0;
    std::vector<std::size_t> argmax;
    for (std::size_t j = 0; j < view.rows.size(); ++j) {
      const double s = instance_similarity(concept_point, *view.rows[j], classifier.config.sigma);
      if (s > best) {
        best = s;
        argmax.assign(1, j);
      } else if (s == best) {
        argmax.push_back(j);
      }
    }
    table.best_similarity[c] = best;
    table.maximizers[c] = std::move(argmax);
  }
  return table;
}

}  // namespace

std::vector<std::size_t> maximizer_index_set(const BagClassifier& classifier,
                                             const Dataset& dataset, const Bag& bag) {
  const MaximizerTable table = build_table(classifier, dataset, bag);
  std::set<std::size_t> varphi;
  for (const auto& row : table.maximizers) varphi.insert(row.begin(), row.end());
  return {varphi.begin(), varphi.end()};
}

std::map<std::size_t, std::size_t> maximizer_counts(const BagClassifier& classifier,
                                                    const Dataset& dataset, const Bag& bag) {
  const MaximizerTable table = build_table(classifier, dataset, bag);
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t c = 0; c < classifier.selected.size(); ++c)
    counts[classifier.selected[c]] = table.maximizers[c].size();
  return counts;
}

namespace {

double contribution_from_table(const BagClassifier& classifier, const MaximizerTable& table,
                               std::size_t j_star) {
  double g = 0.0;
  bool member = false;
  for (std::size_t c = 0; c < classifier.selected.size(); ++c) {
    const auto& row = table.maximizers[c];
    if (std::find(row.begin(), row.end(), j_star) == row.end()) continue;
    member = true;
    g += classifier.weights[classifier.selected[c]] * table.best_similarity[c] /
         static_cast<double>(row.size());
  }
  if (!member) fail(ErrorKind::Domain, "instance index " + std::to_string(j_star) +
                                           " is not in the maximizer set");
  return g;
}

}  // namespace

double instance_contribution(const BagClassifier& classifier, const Dataset& dataset,
                             const Bag& bag, std::size_t j_star) {
  if (j_star >= bag.instances.size())
    fail(ErrorKind::Domain, "instance index " + std::to_string(j_star) + " out of range");
  return contribution_from_table(classifier, build_table(classifier, dataset, bag), j_star);
}

PruneResult prune_instances(const BagClassifier& classifier, const Dataset& dataset,
                            const Bag& bag, std::optional<double> theta) {
  const MaximizerTable table = build_table(classifier, dataset, bag);
  std::set<std::size_t> varphi;
  for (const auto& row : table.maximizers) varphi.insert(row.begin(), row.end());

  PruneResult result;
  if (varphi.empty()) {
    result.empty_maximizer_warning = true;
    result.theta = theta.value_or(0.0);
    for (const auto& iid : bag.instances) {
      result.removed.push_back(iid);
      result.verdicts.push_back({iid, false, std::nullopt, false});
    }
    return result;
  }

  result.theta = theta ? *theta : -classifier.bias / static_cast<double>(varphi.size());
  for (std::size_t j = 0; j < bag.instances.size(); ++j) {
    InstanceVerdict verdict;
    verdict.instance_id = bag.instances[j];
    verdict.in_maximizer_set = varphi.count(j) > 0;
    if (verdict.in_maximizer_set) {
      verdict.contribution = contribution_from_table(classifier, table, j);
      verdict.kept = *verdict.contribution > result.theta;
    }
    if (verdict.kept)
      result.kept.push_back(verdict.instance_id);
    else
      result.removed.push_back(verdict.instance_id);
    result.verdicts.push_back(std::move(verdict));
  }
  return result;
}

void append_pruning_report(const std::filesystem::path& path, const std::string& bag_id,
                           const std::vector<InstanceVerdict>& verdicts) {
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorKind::Io, "cannot write pruning report '" + path.string() + "'");
  for (const auto& v : verdicts) {
    nlohmann::json j;
    j["bag_id"] = bag_id;
    j["instance_id"] = v.instance_id;
    j["in_maximizer_set"] = v.in_maximizer_set;
    j["contribution"] = v.contribution ? nlohmann::json(*v.contribution) : nlohmann::json(nullptr);
    j["kept"] = v.kept;
    out << j.dump() << "\n";
  }
}

}  // namespace curator
