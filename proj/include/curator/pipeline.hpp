#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "curator/classifiers.hpp"
#include "curator/core.hpp"
#include "curator/mil.hpp"
#include "curator/multiview.hpp"
#include "curator/query_discovery.hpp"
#include "curator/synth.hpp"

namespace curator {

struct StageToggles {
  bool discover = false;
  bool salience = false;
  bool relevance = false;
  bool artificial = false;
  bool interclass = false;
  bool intraclass = false;
};

struct PipelinePaths {
  std::filesystem::path out_dir;
  std::filesystem::path ngram_corpus;
  std::filesystem::path count_table;
  std::filesystem::path labeled_queries;
  std::filesystem::path candidates;  // pre-discovered candidate list
  std::filesystem::path candidate_features, candidate_manifest;
  std::filesystem::path train_features, train_manifest;
  std::filesystem::path negative_pool;    // bare feature CSV
  std::filesystem::path target_features;  // bare feature CSV, the target query's own images
  std::filesystem::path artificial_dir, natural_dir, image_dir;
  std::filesystem::path mil_model;  // reuse a trained bag classifier
};

struct PipelineParams {
  TaggedTerm target;
  double salience_threshold = 0.6;
  std::size_t retrieval_depth = 100;
  SalienceSplit salience_split;
  double reg = 1e-3;
  ViewKernel view_kernel1, view_kernel2;
  double coreg_gamma1 = 0.01, coreg_gamma2 = 0.01, coreg_lambda = 0.01;
  double artificial_gamma = 1.0, artificial_reg = 1e-3;
  MilParams mil;
};

struct SynthBenchmark {
  bool enabled = false;
  SynthParams params;
};

struct PipelineConfig {
  int schema_version = 1;
  std::uint64_t seed = 0;
  StageToggles stages;
  PipelinePaths paths;
  PipelineParams params;
  SynthBenchmark synth_benchmark;

  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  void validate() const;
};

struct StageReport {
  std::string name;
  std::size_t queries_in = 0, queries_out = 0;
  std::size_t bags_in = 0, bags_out = 0;
  std::size_t instances_in = 0, instances_out = 0;
  std::vector<std::pair<std::string, std::string>> rejected_queries;  // phrase, reason
  std::vector<std::string> rejected_bags;
  std::vector<std::string> rejected_instances;  // negative-classified maximizers
  std::vector<std::string> unused_instances;    // never realize a selected concept
  std::size_t instances_of_rejected_bags = 0;
  double seconds = 0.0;
};

struct DatasetReport {
  std::vector<StageReport> stages;
  std::string ablation;  // empty, "queries_filtering" or "images_filtering"
  std::optional<Metrics> metrics;
  std::optional<std::string> error;  // stage name + message when aborted
  std::string config_echo;           // the config as saved

  void save(const std::filesystem::path& path) const;
};

enum class AblationFamily { QueriesFiltering, ImagesFiltering };

// Runs the enabled stages in order, persisting each stage's dataset under
// out_dir and aborting with a partial report on the first stage error.
DatasetReport run_pipeline(const PipelineConfig& config);

// Same pipeline with one stage family forced off, for side-by-side reports.
DatasetReport ablate(const PipelineConfig& config, AblationFamily drop);

const char* ablation_name(AblationFamily family);

}  // namespace curator
