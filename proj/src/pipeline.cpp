#include "curator/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include "curator/image_features.hpp"
#include "curator/instance_pruning.hpp"
#include "curator/semantic_distance.hpp"
#include "json.hpp"

namespace curator {

using nlohmann::json;
namespace fs = std::filesystem;

const char* ablation_name(AblationFamily family) {
  return family == AblationFamily::QueriesFiltering ? "queries_filtering" : "images_filtering";
}

// ---------------------------------------------------------------------------
// Config IO
// ---------------------------------------------------------------------------

namespace {

json toggles_to_json(const StageToggles& s) {
  return {{"discover", s.discover},   {"salience", s.salience},
          {"relevance", s.relevance}, {"artificial", s.artificial},
          {"interclass", s.interclass}, {"intraclass", s.intraclass}};
}

fs::path path_or_empty(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return fs::path(j.at(key).get<std::string>());
}

json kernel_json(const ViewKernel& k) {
  return {{"kind", k.kind == KernelKind::Linear ? "linear" : "rbf"}, {"gamma", k.gamma}};
}

ViewKernel kernel_from(const json& j) {
  ViewKernel k;
  k.kind = j.at("kind").get<std::string>() == "linear" ? KernelKind::Linear : KernelKind::Rbf;
  k.gamma = j.at("gamma").get<double>();
  return k;
}

json config_to_json(const PipelineConfig& c) {
  json doc;
  doc["schema_version"] = c.schema_version;
  doc["seed"] = c.seed;
  doc["stages"] = toggles_to_json(c.stages);
  json paths;
  auto put = [&paths](const char* key, const fs::path& p) {
    if (!p.empty()) paths[key] = p.string();
  };
  put("out_dir", c.paths.out_dir);
  put("ngram_corpus", c.paths.ngram_corpus);
  put("count_table", c.paths.count_table);
  put("labeled_queries", c.paths.labeled_queries);
  put("candidates", c.paths.candidates);
  put("candidate_features", c.paths.candidate_features);
  put("candidate_manifest", c.paths.candidate_manifest);
  put("train_features", c.paths.train_features);
  put("train_manifest", c.paths.train_manifest);
  put("negative_pool", c.paths.negative_pool);
  put("target_features", c.paths.target_features);
  put("artificial_dir", c.paths.artificial_dir);
  put("natural_dir", c.paths.natural_dir);
  put("image_dir", c.paths.image_dir);
  put("mil_model", c.paths.mil_model);
  doc["paths"] = std::move(paths);
  doc["params"] = {
      {"target", {{"text", c.params.target.text}, {"pos", std::string(pos_name(c.params.target.pos))}}},
      {"salience_threshold", c.params.salience_threshold},
      {"retrieval_depth", c.params.retrieval_depth},
      {"salience_split",
       {{"train_pos", c.params.salience_split.train_pos},
        {"val_pos", c.params.salience_split.val_pos},
        {"train_neg", c.params.salience_split.train_neg},
        {"val_neg", c.params.salience_split.val_neg}}},
      {"reg", c.params.reg},
      {"view_kernel1", kernel_json(c.params.view_kernel1)},
      {"view_kernel2", kernel_json(c.params.view_kernel2)},
      {"coreg_gamma1", c.params.coreg_gamma1},
      {"coreg_gamma2", c.params.coreg_gamma2},
      {"coreg_lambda", c.params.coreg_lambda},
      {"artificial_gamma", c.params.artificial_gamma},
      {"artificial_reg", c.params.artificial_reg},
      {"mil",
       {{"sigma", c.params.mil.sigma}, {"lambda", c.params.mil.lambda}, {"delta", c.params.mil.delta}}}};
  doc["synth_benchmark"] = {{"enabled", c.synth_benchmark.enabled},
                            {"categories", c.synth_benchmark.params.categories},
                            {"bags_per_category", c.synth_benchmark.params.bags_per_category},
                            {"instances_per_bag", c.synth_benchmark.params.instances_per_bag},
                            {"dimensionality", c.synth_benchmark.params.dimensionality},
                            {"noisy_bag_fraction", c.synth_benchmark.params.noisy_bag_fraction},
                            {"intra_noise_fraction", c.synth_benchmark.params.intra_noise_fraction},
                            {"cluster_separation", c.synth_benchmark.params.cluster_separation},
                            {"seed", c.synth_benchmark.params.seed}};
  return doc;
}

}  // namespace

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, "config '" + path.string() + "': " + e.what());
  }
  PipelineConfig c;
  try {
    c.schema_version = doc.at("schema_version").get<int>();
    if (c.schema_version != 1)
      fail(ErrorKind::Config, "unsupported schema_version " + std::to_string(c.schema_version));
    c.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("stages")) {
      const auto& s = doc.at("stages");
      c.stages.discover = s.value("discover", false);
      c.stages.salience = s.value("salience", false);
      c.stages.relevance = s.value("relevance", false);
      c.stages.artificial = s.value("artificial", false);
      c.stages.interclass = s.value("interclass", false);
      c.stages.intraclass = s.value("intraclass", false);
    }
    if (doc.contains("paths")) {
      const auto& p = doc.at("paths");
      c.paths.out_dir = path_or_empty(p, "out_dir");
      c.paths.ngram_corpus = path_or_empty(p, "ngram_corpus");
      c.paths.count_table = path_or_empty(p, "count_table");
      c.paths.labeled_queries = path_or_empty(p, "labeled_queries");
      c.paths.candidates = path_or_empty(p, "candidates");
      c.paths.candidate_features = path_or_empty(p, "candidate_features");
      c.paths.candidate_manifest = path_or_empty(p, "candidate_manifest");
      c.paths.train_features = path_or_empty(p, "train_features");
      c.paths.train_manifest = path_or_empty(p, "train_manifest");
      c.paths.negative_pool = path_or_empty(p, "negative_pool");
      c.paths.target_features = path_or_empty(p, "target_features");
      c.paths.artificial_dir = path_or_empty(p, "artificial_dir");
      c.paths.natural_dir = path_or_empty(p, "natural_dir");
      c.paths.image_dir = path_or_empty(p, "image_dir");
      c.paths.mil_model = path_or_empty(p, "mil_model");
    }
    if (doc.contains("params")) {
      const auto& p = doc.at("params");
      if (p.contains("target")) {
        c.params.target.text = p.at("target").value("text", std::string{});
        c.params.target.pos = parse_pos(p.at("target").value("pos", std::string{"NOUN"}));
      }
      c.params.salience_threshold = p.value("salience_threshold", 0.6);
      c.params.retrieval_depth = p.value("retrieval_depth", std::size_t{100});
      if (p.contains("salience_split")) {
        const auto& sp = p.at("salience_split");
        c.params.salience_split.train_pos = sp.value("train_pos", std::size_t{75});
        c.params.salience_split.val_pos = sp.value("val_pos", std::size_t{25});
        c.params.salience_split.train_neg = sp.value("train_neg", std::size_t{25});
        c.params.salience_split.val_neg = sp.value("val_neg", std::size_t{25});
      }
      c.params.reg = p.value("reg", 1e-3);
      if (p.contains("view_kernel1")) c.params.view_kernel1 = kernel_from(p.at("view_kernel1"));
      if (p.contains("view_kernel2")) c.params.view_kernel2 = kernel_from(p.at("view_kernel2"));
      c.params.coreg_gamma1 = p.value("coreg_gamma1", 0.01);
      c.params.coreg_gamma2 = p.value("coreg_gamma2", 0.01);
      c.params.coreg_lambda = p.value("coreg_lambda", 0.01);
      c.params.artificial_gamma = p.value("artificial_gamma", 1.0);
      c.params.artificial_reg = p.value("artificial_reg", 1e-3);
      if (p.contains("mil")) {
        const auto& m = p.at("mil");
        c.params.mil.sigma = m.value("sigma", 0.0);
        c.params.mil.lambda = m.value("lambda", 0.01);
        c.params.mil.delta = m.value("delta", 0.5);
      }
    }
    if (doc.contains("synth_benchmark")) {
      const auto& s = doc.at("synth_benchmark");
      c.synth_benchmark.enabled = s.value("enabled", false);
      c.synth_benchmark.params.categories = s.value("categories", 3);
      c.synth_benchmark.params.bags_per_category = s.value("bags_per_category", 20);
      c.synth_benchmark.params.instances_per_bag = s.value("instances_per_bag", 30);
      c.synth_benchmark.params.dimensionality = s.value("dimensionality", 10);
      c.synth_benchmark.params.noisy_bag_fraction = s.value("noisy_bag_fraction", 0.2);
      c.synth_benchmark.params.intra_noise_fraction = s.value("intra_noise_fraction", 0.1);
      c.synth_benchmark.params.cluster_separation = s.value("cluster_separation", 8.0);
      c.synth_benchmark.params.seed = s.value("seed", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, "config '" + path.string() + "': " + e.what());
  }
  c.validate();
  return c;
}

void PipelineConfig::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write config '" + path.string() + "'");
  out << config_to_json(*this).dump(2) << "\n";
}

void PipelineConfig::validate() const {
  if (paths.out_dir.empty()) fail(ErrorKind::Config, "out_dir is required");
  if (synth_benchmark.enabled) {
    if (stages.discover || stages.salience || stages.relevance || stages.artificial)
      fail(ErrorKind::Config,
           "the synthetic benchmark drives only the interclass/intraclass stages");
    return;
  }
  const bool needs_candidates = stages.salience || stages.relevance;
  if (stages.discover && paths.ngram_corpus.empty())
    fail(ErrorKind::Config, "discover stage needs paths.ngram_corpus");
  if (stages.discover && params.target.text.empty())
    fail(ErrorKind::Config, "discover stage needs params.target");
  if (needs_candidates && !stages.discover && paths.candidates.empty())
    fail(ErrorKind::Config, "salience/relevance need discover enabled or paths.candidates");
  if ((stages.salience || stages.relevance || stages.interclass || stages.intraclass) &&
      (paths.candidate_features.empty() || paths.candidate_manifest.empty()))
    fail(ErrorKind::Config, "dataset stages need candidate_features/candidate_manifest");
  if (stages.salience && paths.negative_pool.empty())
    fail(ErrorKind::Config, "salience stage needs paths.negative_pool");
  if (stages.relevance &&
      (paths.count_table.empty() || paths.labeled_queries.empty() ||
       paths.target_features.empty() || paths.negative_pool.empty() || params.target.text.empty()))
    fail(ErrorKind::Config,
         "relevance stage needs count_table, labeled_queries, target_features, negative_pool "
         "and params.target");
  if (stages.artificial && (paths.artificial_dir.empty() || paths.natural_dir.empty() ||
                            paths.image_dir.empty()))
    fail(ErrorKind::Config, "artificial stage needs artificial_dir, natural_dir and image_dir");
  if (stages.interclass && paths.mil_model.empty() &&
      (paths.train_features.empty() || paths.train_manifest.empty()))
    fail(ErrorKind::Config, "interclass stage needs train data or a saved mil_model");
  if (stages.intraclass && !stages.interclass && paths.mil_model.empty())
    fail(ErrorKind::Config, "intraclass stage needs interclass enabled or paths.mil_model");
}

// ---------------------------------------------------------------------------
// Report IO
// ---------------------------------------------------------------------------

namespace {

json stage_to_json(const StageReport& s) {
  json j;
  j["name"] = s.name;
  j["queries_in"] = s.queries_in;
  j["queries_out"] = s.queries_out;
  j["bags_in"] = s.bags_in;
  j["bags_out"] = s.bags_out;
  j["instances_in"] = s.instances_in;
  j["instances_out"] = s.instances_out;
  j["rejected_queries"] = json::array();
  for (const auto& [phrase, reason] : s.rejected_queries)
    j["rejected_queries"].push_back({{"phrase", phrase}, {"reason", reason}});
  j["rejected_bags"] = s.rejected_bags;
  j["rejected_instances"] = s.rejected_instances;
  j["unused_instances"] = s.unused_instances;
  j["instances_of_rejected_bags"] = s.instances_of_rejected_bags;
  j["seconds"] = s.seconds;
  return j;
}

}  // namespace

void DatasetReport::save(const fs::path& path) const {
  json doc;
  doc["stages"] = json::array();
  for (const auto& s : stages) doc["stages"].push_back(stage_to_json(s));
  doc["ablation"] = ablation;
  if (metrics) {
    doc["metrics"] = {{"bag",
                       {{"precision", metrics->bag.precision},
                        {"recall", metrics->bag.recall},
                        {"f1", metrics->bag.f1}}},
                      {"instance",
                       {{"precision", metrics->instance.precision},
                        {"recall", metrics->instance.recall},
                        {"f1", metrics->instance.f1}}}};
  }
  if (error) doc["error"] = *error;
  doc["config"] = json::parse(config_echo.empty() ? "{}" : config_echo);
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write report '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Stage implementations
// ---------------------------------------------------------------------------

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::size_t viable_queries(const std::vector<CandidateQuery>& candidates) {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const CandidateQuery& c) {
        return c.verdict == Verdict::Pending || c.verdict == Verdict::Accepted;
      }));
}

// Returns the number of instances that went with the bags.
std::size_t drop_bags(Dataset& ds, const std::vector<std::string>& bag_ids) {
  std::size_t dropped = 0;
  for (const auto& id : bag_ids) {
    auto it = ds.bags.find(id);
    if (it == ds.bags.end()) continue;
    for (const auto& iid : it->second.instances) dropped += ds.instances.erase(iid);
    ds.bags.erase(it);
  }
  return dropped;
}

// Removes the bags belonging to queries that were rejected in this stage.
std::vector<std::string> bags_of_rejected(const Dataset& ds,
                                          const std::vector<CandidateQuery>& candidates,
                                          Verdict verdict) {
  std::set<std::string> phrases;
  for (const auto& c : candidates)
    if (c.verdict == verdict) phrases.insert(c.phrase);
  std::vector<std::string> out;
  for (const auto& [id, bag] : ds.bags)
    if (phrases.count(bag.query_text)) out.push_back(id);
  return out;
}

std::vector<FeatureVec> rows_to_features(const std::vector<Instance>& rows) {
  std::vector<FeatureVec> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.features);
  return out;
}

struct StageContext {
  const PipelineConfig& config;
  fs::path out_dir;
  std::vector<CandidateQuery> candidates;
  bool have_candidates = false;
  std::optional<Dataset> dataset;  // current candidate dataset
  std::optional<BagClassifier> classifier;
  DatasetReport report;

  void persist_dataset(const std::string& stage) {
    if (!dataset) return;
    save_dataset(*dataset, out_dir / ("after_" + stage + ".features.csv"),
                 out_dir / ("after_" + stage + ".manifest.json"));
  }
  void persist_candidates() {
    if (have_candidates) save_candidates(candidates, out_dir / "candidates.json");
  }
};

StageReport base_report(const StageContext& ctx, const std::string& name) {
  StageReport s;
  s.name = name;
  s.queries_in = viable_queries(ctx.candidates);
  if (ctx.dataset) {
    s.bags_in = ctx.dataset->bags.size();
    s.instances_in = ctx.dataset->instances.size();
  }
  return s;
}

void finish_report(StageContext& ctx, StageReport s, const Timer& timer) {
  s.queries_out = viable_queries(ctx.candidates);
  if (ctx.dataset) {
    s.bags_out = ctx.dataset->bags.size();
    s.instances_out = ctx.dataset->instances.size();
  }
  s.seconds = timer.elapsed();
  ctx.report.stages.push_back(std::move(s));
}

void stage_discover(StageContext& ctx) {
  Timer timer;
  StageReport s = base_report(ctx, "discover");
  const ParsedCorpus corpus = parse_ngram_corpus(ctx.config.paths.ngram_corpus);
  ctx.candidates = discover_candidates(corpus.entries, ctx.config.params.target);
  ctx.have_candidates = true;
  ctx.persist_candidates();
  finish_report(ctx, std::move(s), timer);
}

std::set<std::string> phrases_with(const std::vector<CandidateQuery>& candidates, Verdict v) {
  std::set<std::string> out;
  for (const auto& c : candidates)
    if (c.verdict == v) out.insert(c.phrase);
  return out;
}

void stage_salience(StageContext& ctx) {
  Timer timer;
  StageReport s = base_report(ctx, "salience");
  const auto before = phrases_with(ctx.candidates, Verdict::RejectedNonSalient);
  const auto pool_rows = load_feature_rows(ctx.config.paths.negative_pool);
  const auto pool = rows_to_features(pool_rows);
  salience_filter(ctx.candidates, *ctx.dataset, pool, ctx.config.params.salience_threshold,
                  ctx.config.params.salience_split, ctx.config.params.reg);
  for (const auto& c : ctx.candidates)
    if (c.verdict == Verdict::RejectedNonSalient && !before.count(c.phrase))
      s.rejected_queries.emplace_back(c.phrase, c.note.empty() ? "non-salient" : c.note);
  for (const auto& [phrase, reason] : s.rejected_queries)
    for (const auto& [bag_id, bag] : ctx.dataset->bags)
      if (bag.query_text == phrase) s.rejected_bags.push_back(bag_id);
  std::sort(s.rejected_bags.begin(), s.rejected_bags.end());
  s.instances_of_rejected_bags = drop_bags(*ctx.dataset, s.rejected_bags);
  ctx.persist_candidates();
  ctx.persist_dataset("salience");
  finish_report(ctx, std::move(s), timer);
}

void stage_relevance(StageContext& ctx) {
  Timer timer;
  StageReport s = base_report(ctx, "relevance");
  const auto& cfg = ctx.config;
  const auto before = phrases_with(ctx.candidates, Verdict::RejectedIrrelevant);

  const CountTable table = CountTable::load(cfg.paths.count_table);
  semantic_graph(table, cfg.params.target.text, ctx.candidates);

  const auto target_rows = rows_to_features(load_feature_rows(cfg.paths.target_features));
  const auto pool = rows_to_features(load_feature_rows(cfg.paths.negative_pool));
  const LinearModel center = train_linear(target_rows, pool, cfg.params.reg);
  save_linear_model(center, ctx.out_dir / "center_model.json");
  visual_distance_graph(center, ctx.candidates, *ctx.dataset);

  const auto labeled_rows = load_labeled_queries(cfg.paths.labeled_queries);
  std::vector<LabeledPoint> labeled;
  labeled.reserve(labeled_rows.size());
  for (const auto& q : labeled_rows)
    labeled.push_back({q.semantic_distance, q.visual_distance, q.label});
  std::vector<std::pair<double, double>> unlabeled;
  for (const auto& c : ctx.candidates)
    if (c.verdict == Verdict::Pending && c.semantic_distance && c.visual_distance)
      unlabeled.emplace_back(*c.semantic_distance, *c.visual_distance);

  const CoRegModel model =
      train_coreg(labeled, unlabeled, cfg.params.view_kernel1, cfg.params.view_kernel2,
                  cfg.params.coreg_gamma1, cfg.params.coreg_gamma2, cfg.params.coreg_lambda);
  save_coreg_model(model, ctx.out_dir / "coreg_model.json");
  relevance_filter(model, ctx.candidates);

  for (const auto& c : ctx.candidates)
    if (c.verdict == Verdict::RejectedIrrelevant && !before.count(c.phrase))
      s.rejected_queries.emplace_back(c.phrase, "irrelevant");
  s.rejected_bags = bags_of_rejected(*ctx.dataset, ctx.candidates, Verdict::RejectedIrrelevant);
  s.instances_of_rejected_bags = drop_bags(*ctx.dataset, s.rejected_bags);
  ctx.persist_candidates();
  ctx.persist_dataset("relevance");
  finish_report(ctx, std::move(s), timer);
}

void stage_artificial(StageContext& ctx) {
  Timer timer;
  StageReport s = base_report(ctx, "artificial");
  const auto& cfg = ctx.config;

  auto load_dir = [](const fs::path& dir) {
    std::vector<PixelImage> images;
    std::vector<std::string> names;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".png")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      images.push_back(read_png(p));
      names.push_back(p.stem().string());
    }
    return std::make_pair(std::move(images), std::move(names));
  };

  auto [artificial_imgs, a_names] = load_dir(cfg.paths.artificial_dir);
  auto [natural_imgs, n_names] = load_dir(cfg.paths.natural_dir);
  const ArtificialFilter filter = train_artificial_filter(
      artificial_imgs, natural_imgs, cfg.params.artificial_gamma, cfg.params.artificial_reg);
  save_kernel_model(filter.model, ctx.out_dir / "artificial_filter.json");

  auto [targets, target_names] = load_dir(cfg.paths.image_dir);
  const ImagePartition partition = prune_artificial(filter, targets);

  std::ofstream jsonl(ctx.out_dir / "artificial_partition.jsonl", std::ios::trunc);
  if (!jsonl) fail(ErrorKind::Io, "cannot write artificial_partition.jsonl");
  std::set<std::string> removed_stems;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const bool removed = std::binary_search(partition.artificial_removed.begin(),
                                            partition.artificial_removed.end(), i);
    json j;
    j["file"] = target_names[i] + ".png";
    j["score"] = partition.scores[i];
    j["removed"] = removed;
    jsonl << j.dump() << "\n";
    if (removed) removed_stems.insert(target_names[i]);
  }

  // When instances are keyed by file stem, drop the pruned images from the
  // dataset as well; bags emptied by the drop go with them.
  if (ctx.dataset) {
    for (auto& [bag_id, bag] : ctx.dataset->bags) {
      std::vector<std::string> keep;
      for (const auto& iid : bag.instances) {
        if (removed_stems.count(iid)) {
          s.rejected_instances.push_back(iid);
          ctx.dataset->instances.erase(iid);
        } else {
          keep.push_back(iid);
        }
      }
      bag.instances = std::move(keep);
    }
    std::vector<std::string> emptied;
    for (const auto& [bag_id, bag] : ctx.dataset->bags)
      if (bag.instances.empty()) emptied.push_back(bag_id);
    for (const auto& id : emptied) ctx.dataset->bags.erase(id);
    s.rejected_bags = emptied;
    ctx.persist_dataset("artificial");
  }
  finish_report(ctx, std::move(s), timer);
}

std::vector<const Bag*> labeled_bags(const Dataset& ds, int label) {
  std::vector<const Bag*> out;
  for (const auto& [id, bag] : ds.bags)
    if (bag.label && *bag.label == label) out.push_back(&bag);
  return out;
}

void stage_interclass(StageContext& ctx) {
  Timer timer;
  StageReport s = base_report(ctx, "interclass");
  const auto& cfg = ctx.config;

  if (!cfg.paths.train_features.empty()) {
    const Dataset train = load_dataset(cfg.paths.train_features, cfg.paths.train_manifest);
    const auto pos = labeled_bags(train, 1);
    const auto neg = labeled_bags(train, -1);
    if (pos.empty() || neg.empty())
      fail(ErrorKind::Training, "training dataset must contain bags labeled +1 and -1");
    ctx.classifier = train_bag_classifier(train, pos, neg, cfg.params.mil);
  } else if (!cfg.paths.mil_model.empty()) {
    ctx.classifier = load_bag_classifier(cfg.paths.mil_model);
  } else {
    fail(ErrorKind::Config, "interclass stage has no training data and no model");
  }
  save_bag_classifier(*ctx.classifier, ctx.out_dir / "mil_model.json");

  std::vector<const Bag*> candidates;
  for (const auto& [id, bag] : ctx.dataset->bags) candidates.push_back(&bag);
  const BagPartition partition = prune_bags(*ctx.classifier, *ctx.dataset, candidates);
  s.rejected_bags = partition.rejected;
  s.instances_of_rejected_bags = drop_bags(*ctx.dataset, partition.rejected);
  ctx.persist_dataset("interclass");
  finish_report(ctx, std::move(s), timer);
}

void stage_intraclass(StageContext& ctx) {
  Timer timer;
  StageReport s = base_report(ctx, "intraclass");
  const auto& cfg = ctx.config;

  if (!ctx.classifier) {
    if (cfg.paths.mil_model.empty())
      fail(ErrorKind::Config, "intraclass stage needs a trained bag classifier");
    ctx.classifier = load_bag_classifier(cfg.paths.mil_model);
  }

  const fs::path report_path = ctx.out_dir / "instance_verdicts.jsonl";
  std::ofstream(report_path, std::ios::trunc);  // start fresh

  std::vector<std::string> emptied_bags;
  for (auto& [bag_id, bag] : ctx.dataset->bags) {
    const PruneResult result = prune_instances(*ctx.classifier, *ctx.dataset, bag);
    append_pruning_report(report_path, bag_id, result.verdicts);
    for (const auto& verdict : result.verdicts) {
      if (verdict.kept) continue;
      if (verdict.in_maximizer_set)
        s.rejected_instances.push_back(verdict.instance_id);  // negative-classified
      else
        s.unused_instances.push_back(verdict.instance_id);
      ctx.dataset->instances.erase(verdict.instance_id);
    }
    bag.instances = result.kept;
    if (bag.instances.empty()) emptied_bags.push_back(bag_id);
  }
  for (const auto& id : emptied_bags) ctx.dataset->bags.erase(id);
  s.rejected_bags = emptied_bags;
  ctx.persist_dataset("intraclass");
  finish_report(ctx, std::move(s), timer);
}

// ---------------------------------------------------------------------------
// Synthetic benchmark: one interclass+intraclass pass per category, training
// bags labeled from a companion dataset generated at a derived seed.
// ---------------------------------------------------------------------------

std::uint64_t derive_train_seed(std::uint64_t seed) {
  const std::uint64_t x = seed ^ 0xda7a5e7bf00dULL;
  return x * 0x2545F4914F6CDD1DULL + 1;
}

Dataset restrict_to_category(const Dataset& full, int category) {
  Dataset out;
  out.dimensionality = full.dimensionality;
  for (const auto& [bag_id, bag] : full.bags) {
    if (synth_bag_category(bag_id) != category) continue;
    Bag copy = bag;
    copy.label.reset();
    for (const auto& iid : copy.instances) out.instances.emplace(iid, full.instance(iid));
    out.bags.emplace(bag_id, std::move(copy));
  }
  return out;
}

Dataset label_for_target(const Dataset& train, const GroundTruth& truth, int category) {
  Dataset out = train;
  for (auto& [bag_id, bag] : out.bags) {
    const bool own = synth_bag_category(bag_id) == category;
    const bool clean = truth.noisy_bags.count(bag_id) == 0;
    bag.label = (own && clean) ? 1 : -1;
  }
  return out;
}

DatasetReport run_synth_benchmark(const PipelineConfig& config, std::string ablation) {
  const bool images_filtering = ablation != "images_filtering";
  const fs::path out_dir = config.paths.out_dir;
  fs::create_directories(out_dir);

  SynthParams params = config.synth_benchmark.params;
  if (params.seed == 0) params.seed = config.seed;
  auto [eval_ds, eval_truth] = synth_generate(params);
  SynthParams train_params = params;
  train_params.seed = derive_train_seed(params.seed);
  auto [train_ds, train_truth] = synth_generate(train_params);

  save_dataset(eval_ds, out_dir / "candidates.features.csv", out_dir / "candidates.manifest.json");
  save_ground_truth(eval_truth, out_dir / "candidates.truth.json");
  save_dataset(train_ds, out_dir / "train.features.csv", out_dir / "train.manifest.json");

  DatasetReport report;
  report.ablation = std::move(ablation);
  report.config_echo = config_to_json(config).dump(2);

  std::set<std::string> removed_bags;
  std::set<std::string> removed_instances;

  if (images_filtering) {
    for (int c = 0; c < params.categories; ++c) {
      const fs::path cat_dir = out_dir / ("cat" + std::to_string(c));
      fs::create_directories(cat_dir);

      const Dataset train_c = label_for_target(train_ds, train_truth, c);
      save_dataset(train_c, cat_dir / "train.features.csv", cat_dir / "train.manifest.json");

      PipelineConfig sub = config;
      sub.stages = {};
      sub.stages.interclass = true;
      sub.stages.intraclass = true;
      sub.synth_benchmark.enabled = false;
      sub.paths.out_dir = cat_dir;
      sub.paths.train_features = cat_dir / "train.features.csv";
      sub.paths.train_manifest = cat_dir / "train.manifest.json";

      StageContext ctx{sub, cat_dir, {}, false, restrict_to_category(eval_ds, c), {}, {}};
      save_dataset(*ctx.dataset, cat_dir / "candidates.features.csv",
                   cat_dir / "candidates.manifest.json");
      stage_interclass(ctx);
      stage_intraclass(ctx);

      for (auto& stage : ctx.report.stages) {
        // Bag-level noise predictions come from the inter-class decision;
        // instance-level ones are the negatively classified maximizers.
        if (stage.name == "interclass")
          removed_bags.insert(stage.rejected_bags.begin(), stage.rejected_bags.end());
        for (const auto& id : stage.rejected_instances) removed_instances.insert(id);
        stage.name = "cat" + std::to_string(c) + ":" + stage.name;
        report.stages.push_back(std::move(stage));
      }
    }
  }

  report.metrics = evaluate(eval_ds, removed_bags, removed_instances, eval_truth);
  report.save(out_dir / "report.json");
  return report;
}

DatasetReport run_with_toggles(PipelineConfig config, std::string ablation) {
  config.validate();
  if (config.synth_benchmark.enabled) return run_synth_benchmark(config, std::move(ablation));

  fs::create_directories(config.paths.out_dir);
  StageContext ctx{config, config.paths.out_dir, {}, false, {}, {}, {}};
  ctx.report.ablation = ablation;
  ctx.report.config_echo = config_to_json(config).dump(2);

  if (!config.paths.candidates.empty()) {
    ctx.candidates = load_candidates(config.paths.candidates);
    ctx.have_candidates = true;
  }
  if (!config.paths.candidate_features.empty())
    ctx.dataset = load_dataset(config.paths.candidate_features, config.paths.candidate_manifest);

  struct StageEntry {
    const char* name;
    bool enabled;
    void (*run)(StageContext&);
  };
  const StageEntry chain[] = {
      {"discover", config.stages.discover, stage_discover},
      {"salience", config.stages.salience, stage_salience},
      {"relevance", config.stages.relevance, stage_relevance},
      {"artificial", config.stages.artificial, stage_artificial},
      {"interclass", config.stages.interclass, stage_interclass},
      {"intraclass", config.stages.intraclass, stage_intraclass},
  };
  for (const auto& entry : chain) {
    if (!entry.enabled) continue;
    try {
      entry.run(ctx);
    } catch (const Error& e) {
      ctx.report.error = std::string(entry.name) + ": " + e.what();
      ctx.report.save(config.paths.out_dir / "report.json");
      throw;
    }
  }
  ctx.report.save(config.paths.out_dir / "report.json");
  return ctx.report;
}

}  // namespace

DatasetReport run_pipeline(const PipelineConfig& config) { return run_with_toggles(config, ""); }

DatasetReport ablate(const PipelineConfig& config, AblationFamily drop) {
  PipelineConfig adjusted = config;
  if (drop == AblationFamily::QueriesFiltering) {
    adjusted.stages.salience = false;
    adjusted.stages.relevance = false;
  } else {
    adjusted.stages.artificial = false;
    adjusted.stages.interclass = false;
    adjusted.stages.intraclass = false;
  }
  return run_with_toggles(adjusted, ablation_name(drop));
}

}  // namespace curator
