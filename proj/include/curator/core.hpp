#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curator/error.hpp"

namespace curator {

using FeatureVec = std::vector<double>;

/// One image: an opaque id plus its feature vector.
struct Instance {
  std::string id;
  std::vector<double> features;
};

/// The image set retrieved for one textual query. `label`, when present,
/// is +1 or -1; unlabeled bags are candidates awaiting a verdict.
struct Bag {
  std::string id;
  std::string query_text;
  std::optional<int> label;
  std::vector<std::string> instances;  // ordered instance ids
};

struct Dataset {
  std::size_t dimensionality = 0;
  std::map<std::string, Instance> instances;
  std::map<std::string, Bag> bags;

  // Throws Error on any invariant violation: feature length mismatch,
  // non-finite values, empty bags, duplicate membership, dangling ids,
  // or instances not referenced by any bag.
  void validate() const;

  const Instance& instance(const std::string& id) const;
  std::size_t total_instances() const { return instances.size(); }
};

// Features file: CSV `id,f_1,...,f_d` with a header row.
// Bag manifest: JSON {"dimensionality": d, "bags": [...]}.
Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& manifest_path);
void save_dataset(const Dataset& dataset,
                  const std::filesystem::path& features_path,
                  const std::filesystem::path& manifest_path);

// Bare feature CSV without a manifest, used for negative pools and
// target-query image features. Row order preserved.
std::vector<Instance> load_feature_rows(const std::filesystem::path& path);
void save_feature_rows(const std::vector<Instance>& rows,
                       const std::filesystem::path& path);

// 17 significant digits, enough to round-trip any double through text.
std::string format_real(double value);

}  // namespace curator
