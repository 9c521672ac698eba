// Batch curation toolkit CLI: query discovery, query filtering, noisy-image
// pruning, synthetic benchmarks.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "curator/core.hpp"
#include "curator/image_features.hpp"
#include "curator/instance_pruning.hpp"
#include "curator/mil.hpp"
#include "curator/multiview.hpp"
#include "curator/pipeline.hpp"
#include "curator/query_discovery.hpp"
#include "curator/semantic_distance.hpp"
#include "curator/synth.hpp"
#include "json.hpp"

namespace {

using namespace curator;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Parameter:
      return 2;
    case ErrorKind::Numerical:
      return 4;
    default:
      return 3;
  }
}

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

PipelineConfig load_config(const GlobalOptions& global, bool required = true) {
  PipelineConfig config;
  if (!global.config_path.empty()) {
    config = PipelineConfig::load(global.config_path);
  } else if (required) {
    fail(ErrorKind::Config, "--config <path> is required for this command");
  }
  if (global.seed) {
    config.seed = *global.seed;
    config.synth_benchmark.params.seed = *global.seed;
  }
  if (!global.out_dir.empty()) config.paths.out_dir = global.out_dir;
  if (config.paths.out_dir.empty()) fail(ErrorKind::Config, "--out <dir> or paths.out_dir is required");
  return config;
}

PipelineConfig stage_only(PipelineConfig config, StageToggles toggles) {
  config.stages = toggles;
  config.synth_benchmark.enabled = false;
  return config;
}

void print_stage_summary(const DatasetReport& report) {
  for (const auto& s : report.stages) {
    std::printf("stage %-22s bags %zu -> %zu, instances %zu -> %zu", s.name.c_str(), s.bags_in,
                s.bags_out, s.instances_in, s.instances_out);
    if (!s.rejected_queries.empty()) std::printf(", queries rejected %zu", s.rejected_queries.size());
    std::printf("\n");
  }
  if (report.metrics) {
    std::printf("bag       precision %.4f recall %.4f f1 %.4f\n", report.metrics->bag.precision,
                report.metrics->bag.recall, report.metrics->bag.f1);
    std::printf("instance  precision %.4f recall %.4f f1 %.4f\n",
                report.metrics->instance.precision, report.metrics->instance.recall,
                report.metrics->instance.f1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curation toolkit for noisy multi-query image collections"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "pipeline config JSON")->expected(1);
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");
  app.add_option("--out", global.out_dir, "override the output directory");

  // discover
  auto* cmd_discover = app.add_subcommand("discover", "discover candidate queries from an ngram corpus");
  std::string target_text, target_pos = "NOUN", corpus_path;
  cmd_discover->add_option("--target", target_text, "target term");
  cmd_discover->add_option("--pos", target_pos, "target part of speech");
  cmd_discover->add_option("--corpus", corpus_path, "ngram corpus TSV");

  // ngd
  auto* cmd_ngd = app.add_subcommand("ngd", "semantic distance from a count table");
  std::string ngd_table, ngd_x, ngd_y;
  cmd_ngd->add_option("--table", ngd_table, "count table JSON");
  cmd_ngd->add_option("--x", ngd_x, "first term");
  cmd_ngd->add_option("--y", ngd_y, "second term");

  auto* cmd_salience = app.add_subcommand("salience", "reject visually non-salient queries");
  auto* cmd_filter = app.add_subcommand("filter-queries", "reject less relevant queries");
  auto* cmd_artificial = app.add_subcommand("prune-artificial", "remove non-photographic images");
  auto* cmd_train = app.add_subcommand("train-mil", "train the bag classifier");
  auto* cmd_prune_bags = app.add_subcommand("prune-bags", "remove inter-class noisy bags");
  auto* cmd_prune_inst = app.add_subcommand("prune-instances", "remove intra-class noisy instances");

  // synth
  auto* cmd_synth = app.add_subcommand("synth", "generate a planted-noise benchmark dataset");
  SynthParams synth_params;
  cmd_synth->add_option("--categories", synth_params.categories);
  cmd_synth->add_option("--bags", synth_params.bags_per_category);
  cmd_synth->add_option("--instances", synth_params.instances_per_bag);
  cmd_synth->add_option("--dim", synth_params.dimensionality);
  cmd_synth->add_option("--bag-noise", synth_params.noisy_bag_fraction);
  cmd_synth->add_option("--intra-noise", synth_params.intra_noise_fraction);
  cmd_synth->add_option("--separation", synth_params.cluster_separation);

  // evaluate
  auto* cmd_evaluate = app.add_subcommand("evaluate", "score removal predictions against ground truth");
  std::string truth_path, report_path, eval_features, eval_manifest;
  cmd_evaluate->add_option("--truth", truth_path, "ground truth JSON");
  cmd_evaluate->add_option("--report", report_path, "pipeline report JSON with removal lists");
  cmd_evaluate->add_option("--features", eval_features, "dataset the ids refer to");
  cmd_evaluate->add_option("--manifest", eval_manifest, "dataset manifest");

  auto* cmd_run = app.add_subcommand("run", "run the configured pipeline end to end");
  auto* cmd_ablate = app.add_subcommand("ablate", "run the pipeline with one stage family dropped");
  std::string drop_family;
  cmd_ablate->add_option("--drop", drop_family, "queries_filtering or images_filtering")->required();

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) global.seed = seed_value;

  try {
    if (cmd_discover->parsed()) {
      PipelineConfig config = load_config(global, corpus_path.empty() || target_text.empty());
      if (!corpus_path.empty()) config.paths.ngram_corpus = corpus_path;
      if (!target_text.empty()) config.params.target = {target_text, parse_pos(target_pos)};
      StageToggles toggles;
      toggles.discover = true;
      print_stage_summary(run_pipeline(stage_only(std::move(config), toggles)));
    } else if (cmd_ngd->parsed()) {
      if (!ngd_x.empty() || !ngd_y.empty()) {
        if (ngd_table.empty() || ngd_x.empty() || ngd_y.empty())
          fail(ErrorKind::Config, "ngd needs --table, --x and --y");
        const CountTable table = CountTable::load(ngd_table);
        std::printf("%.10f\n", ngd(table, ngd_x, ngd_y));
      } else {
        // Annotate the configured candidates file with semantic distances.
        PipelineConfig config = load_config(global);
        if (config.paths.count_table.empty() || config.paths.candidates.empty())
          fail(ErrorKind::Config, "ngd needs paths.count_table and paths.candidates");
        const CountTable table = CountTable::load(config.paths.count_table);
        auto candidates = load_candidates(config.paths.candidates);
        semantic_graph(table, config.params.target.text, candidates);
        save_candidates(candidates, config.paths.out_dir / "candidates.json");
        std::printf("scored %zu candidates\n", candidates.size());
      }
    } else if (cmd_salience->parsed()) {
      StageToggles toggles;
      toggles.salience = true;
      print_stage_summary(run_pipeline(stage_only(load_config(global), toggles)));
    } else if (cmd_filter->parsed()) {
      StageToggles toggles;
      toggles.relevance = true;
      print_stage_summary(run_pipeline(stage_only(load_config(global), toggles)));
    } else if (cmd_artificial->parsed()) {
      StageToggles toggles;
      toggles.artificial = true;
      print_stage_summary(run_pipeline(stage_only(load_config(global), toggles)));
    } else if (cmd_train->parsed()) {
      PipelineConfig config = load_config(global);
      if (config.paths.train_features.empty() || config.paths.train_manifest.empty())
        fail(ErrorKind::Config, "train-mil needs train_features/train_manifest");
      const Dataset train = load_dataset(config.paths.train_features, config.paths.train_manifest);
      std::vector<const Bag*> pos, neg;
      for (const auto& [id, bag] : train.bags) {
        if (!bag.label) continue;
        (*bag.label > 0 ? pos : neg).push_back(&bag);
      }
      if (pos.empty() || neg.empty())
        fail(ErrorKind::Training, "training dataset must contain bags labeled +1 and -1");
      const BagClassifier classifier = train_bag_classifier(train, pos, neg, config.params.mil);
      std::filesystem::create_directories(config.paths.out_dir);
      save_bag_classifier(classifier, config.paths.out_dir / "mil_model.json");
      std::printf("trained on %zu+%zu bags, sigma %.6g, |phi| = %zu\n", pos.size(), neg.size(),
                  classifier.config.sigma, classifier.selected.size());
    } else if (cmd_prune_bags->parsed()) {
      PipelineConfig config = load_config(global);
      if (config.paths.mil_model.empty())
        fail(ErrorKind::Config, "prune-bags needs paths.mil_model");
      config.paths.train_features.clear();
      config.paths.train_manifest.clear();
      StageToggles toggles;
      toggles.interclass = true;
      print_stage_summary(run_pipeline(stage_only(std::move(config), toggles)));
    } else if (cmd_prune_inst->parsed()) {
      PipelineConfig config = load_config(global);
      if (config.paths.mil_model.empty())
        fail(ErrorKind::Config, "prune-instances needs paths.mil_model");
      StageToggles toggles;
      toggles.intraclass = true;
      print_stage_summary(run_pipeline(stage_only(std::move(config), toggles)));
    } else if (cmd_synth->parsed()) {
      PipelineConfig config = load_config(global, false);
      synth_params.seed = config.seed;
      if (global.seed) synth_params.seed = *global.seed;
      const auto [dataset, truth] = synth_generate(synth_params);
      std::filesystem::create_directories(config.paths.out_dir);
      save_dataset(dataset, config.paths.out_dir / "synth.features.csv",
                   config.paths.out_dir / "synth.manifest.json");
      save_ground_truth(truth, config.paths.out_dir / "synth.truth.json");
      std::printf("generated %zu bags, %zu instances (%zu noisy bags, %zu noisy instances)\n",
                  dataset.bags.size(), dataset.instances.size(), truth.noisy_bags.size(),
                  truth.noisy_instances.size());
    } else if (cmd_evaluate->parsed()) {
      if (truth_path.empty() || report_path.empty() || eval_features.empty() || eval_manifest.empty())
        fail(ErrorKind::Config, "evaluate needs --truth, --report, --features and --manifest");
      const Dataset dataset = load_dataset(eval_features, eval_manifest);
      const GroundTruth truth = load_ground_truth(truth_path);
      std::ifstream in(report_path);
      if (!in) fail(ErrorKind::Io, "cannot open report '" + report_path + "'");
      nlohmann::json doc;
      in >> doc;
      std::set<std::string> removed_bags, removed_instances;
      for (const auto& stage : doc.at("stages")) {
        if (stage.at("name").get<std::string>().find("interclass") != std::string::npos)
          for (const auto& id : stage.at("rejected_bags")) removed_bags.insert(id.get<std::string>());
        for (const auto& id : stage.at("rejected_instances"))
          removed_instances.insert(id.get<std::string>());
      }
      const Metrics metrics = evaluate(dataset, removed_bags, removed_instances, truth);
      std::printf("bag       precision %.4f recall %.4f f1 %.4f\n", metrics.bag.precision,
                  metrics.bag.recall, metrics.bag.f1);
      std::printf("instance  precision %.4f recall %.4f f1 %.4f\n", metrics.instance.precision,
                  metrics.instance.recall, metrics.instance.f1);
    } else if (cmd_run->parsed()) {
      print_stage_summary(run_pipeline(load_config(global)));
    } else if (cmd_ablate->parsed()) {
      AblationFamily family;
      if (drop_family == "queries_filtering")
        family = AblationFamily::QueriesFiltering;
      else if (drop_family == "images_filtering")
        family = AblationFamily::ImagesFiltering;
      else
        fail(ErrorKind::Config, "--drop must be queries_filtering or images_filtering");
      print_stage_summary(ablate(load_config(global), family));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
