#include "curator/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

namespace curator {

void SynthParams::validate() const {
  if (categories < 1) fail(ErrorKind::Parameter, "categories must be >= 1");
  if (bags_per_category < 1) fail(ErrorKind::Parameter, "bags_per_category must be >= 1");
  if (instances_per_bag < 1) fail(ErrorKind::Parameter, "instances_per_bag must be >= 1");
  if (dimensionality < 1) fail(ErrorKind::Parameter, "dimensionality must be >= 1");
  if (noisy_bag_fraction < 0 || noisy_bag_fraction >= 1)
    fail(ErrorKind::Parameter, "noisy_bag_fraction must lie in [0,1)");
  if (intra_noise_fraction < 0 || intra_noise_fraction >= 1)
    fail(ErrorKind::Parameter, "intra_noise_fraction must lie in [0,1)");
  if (!(cluster_separation > 0)) fail(ErrorKind::Parameter, "cluster_separation must be positive");
  if (categories > 99) fail(ErrorKind::Parameter, "at most 99 categories supported by the id scheme");
  if (categories < 2 && std::floor(intra_noise_fraction * instances_per_bag) >= 1)
    fail(ErrorKind::Parameter, "intra-class noise needs a second category to draw from");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> category_center(int category, int dim, double separation) {
  std::vector<double> center(static_cast<std::size_t>(dim), 0.0);
  const int axis = category % dim;
  const double scale = 2.0 * separation * (1.0 + static_cast<double>(category / dim));
  center[static_cast<std::size_t>(axis)] = scale;
  return center;
}

std::string bag_name(int category, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%02d_b%03d", category, index);
  return buf;
}

}  // namespace

int synth_bag_category(const std::string& bag_id) {
  if (bag_id.size() < 3 || bag_id[0] != 'c')
    fail(ErrorKind::Parameter, "bag id '" + bag_id + "' is not a synthetic id");
  return std::stoi(bag_id.substr(1, 2));
}

std::pair<Dataset, GroundTruth> synth_generate(const SynthParams& params) {
  params.validate();

  Dataset ds;
  ds.dimensionality = static_cast<std::size_t>(params.dimensionality);
  GroundTruth truth;

  const int noisy_bags_per_cat =
      static_cast<int>(std::floor(params.noisy_bag_fraction * params.bags_per_category));
  const int noisy_inst_per_bag =
      static_cast<int>(std::floor(params.intra_noise_fraction * params.instances_per_bag));

  for (int c = 0; c < params.categories; ++c) {
    std::mt19937_64 eng(splitmix64(params.seed ^ (0x5DEECE66DULL * (c + 1))));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto center = category_center(c, params.dimensionality, params.cluster_separation);

    std::vector<int> order(static_cast<std::size_t>(params.bags_per_category));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), eng);
    std::set<int> noisy_set(order.begin(), order.begin() + noisy_bags_per_cat);

    for (int b = 0; b < params.bags_per_category; ++b) {
      const bool noisy = noisy_set.count(b) > 0;
      Bag bag;
      bag.id = bag_name(c, b);
      bag.query_text = bag.id;

      std::vector<double> origin = center;
      if (noisy) {
        // Random direction at the configured separation.
        std::vector<double> dir(static_cast<std::size_t>(params.dimensionality));
        double norm = 0.0;
        for (auto& v : dir) {
          v = gauss(eng);
          norm += v * v;
        }
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < dir.size(); ++i)
          origin[i] += params.cluster_separation * dir[i] / norm;
        truth.noisy_bags.insert(bag.id);
      }

      std::vector<int> noise_positions;
      if (!noisy && noisy_inst_per_bag > 0) {
        std::vector<int> slots(static_cast<std::size_t>(params.instances_per_bag));
        std::iota(slots.begin(), slots.end(), 0);
        std::shuffle(slots.begin(), slots.end(), eng);
        noise_positions.assign(slots.begin(), slots.begin() + noisy_inst_per_bag);
        std::sort(noise_positions.begin(), noise_positions.end());
      }

      for (int j = 0; j < params.instances_per_bag; ++j) {
        Instance inst;
        inst.id = bag.id + "_i" + std::to_string(j);
        inst.features.resize(static_cast<std::size_t>(params.dimensionality));

        const bool foreign =
            std::binary_search(noise_positions.begin(), noise_positions.end(), j);
        std::vector<double> base = origin;
        if (foreign) {
          std::uniform_int_distribution<int> pick(0, params.categories - 2);
          int other = pick(eng);
          if (other >= c) ++other;
          base = category_center(other, params.dimensionality, params.cluster_separation);
          truth.noisy_instances.insert(inst.id);
        }
        for (std::size_t i = 0; i < inst.features.size(); ++i)
          inst.features[i] = base[i] + gauss(eng);

        bag.instances.push_back(inst.id);
        ds.instances.emplace(inst.id, std::move(inst));
      }
      ds.bags.emplace(bag.id, std::move(bag));
    }
  }
  ds.validate();
  return {std::move(ds), std::move(truth)};
}

namespace {

LevelMetrics level_metrics(const std::set<std::string>& predicted,
                           const std::set<std::string>& truth) {
  std::size_t tp = 0;
  for (const auto& id : predicted) tp += truth.count(id);

  LevelMetrics m;
  m.precision = predicted.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(predicted.size());
  m.recall = truth.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(truth.size());
  m.f1 = (m.precision * m.recall == 0.0) ? 0.0
                                         : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

}  // namespace

Metrics evaluate(const Dataset& dataset, const std::set<std::string>& removed_bags,
                 const std::set<std::string>& removed_instances, const GroundTruth& truth) {
  for (const auto& id : removed_bags)
    if (!dataset.bags.count(id)) fail(ErrorKind::Parameter, "unknown bag id '" + id + "'");
  for (const auto& id : removed_instances)
    if (!dataset.instances.count(id)) fail(ErrorKind::Parameter, "unknown instance id '" + id + "'");
  for (const auto& id : truth.noisy_bags)
    if (!dataset.bags.count(id)) fail(ErrorKind::Parameter, "truth names unknown bag '" + id + "'");
  for (const auto& id : truth.noisy_instances)
    if (!dataset.instances.count(id))
      fail(ErrorKind::Parameter, "truth names unknown instance '" + id + "'");

  Metrics metrics;
  metrics.bag = level_metrics(removed_bags, truth.noisy_bags);
  metrics.instance = level_metrics(removed_instances, truth.noisy_instances);
  return metrics;
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["noisy_bags"] = truth.noisy_bags;
  doc["noisy_instances"] = truth.noisy_instances;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write ground truth '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open ground truth '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, "ground truth '" + path.string() + "': " + e.what());
  }
  GroundTruth truth;
  for (const auto& id : doc.at("noisy_bags")) truth.noisy_bags.insert(id.get<std::string>());
  for (const auto& id : doc.at("noisy_instances"))
    truth.noisy_instances.insert(id.get<std::string>());
  return truth;
}

}  // namespace curator
