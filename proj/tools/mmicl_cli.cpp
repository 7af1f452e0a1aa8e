// Command line driver: validate, select, build, predict, evaluate, slr,
// sweep, run and preset list.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmicl/error.hpp"
#include "mmicl/pipeline.hpp"
#include "mmicl/records.hpp"

using namespace mmicl;

namespace {

struct DataFlags {
  std::string config;
  std::string manifest;
  std::string embeddings;
  std::string scheme = "Positive,Neutral,Negative";
  std::string task = "post";

  void add(CLI::App* app, bool need_embeddings) {
    app->add_option("--config", config, "Dataset config file (key = value)");
    app->add_option("--manifest", manifest, "Line-delimited manifest");
    if (need_embeddings) app->add_option("--embeddings", embeddings, "Directory of .emb channel files");
    app->add_option("--scheme", scheme, "Comma separated categories")->capture_default_str();
    app->add_option("--task", task, "post or aspect")->capture_default_str();
  }

  DatasetConfig resolve() const {
    if (!config.empty()) {
      auto c = load_dataset_config(config);
      if (!manifest.empty()) c.manifest_path = manifest;
      if (!embeddings.empty()) c.embedding_dir = embeddings;
      return c;
    }
    if (manifest.empty()) throw Error(ErrorCode::Config, "pass --config or --manifest");
    std::vector<std::string> cats;
    std::string cur;
    for (char ch : scheme + ",") {
      if (ch == ',') {
        if (!cur.empty()) cats.push_back(cur);
        cur.clear();
      } else if (ch != ' ') {
        cur += ch;
      }
    }
    return DatasetConfig{SentimentScheme("cli", cats, parse_task_type(task)), manifest, embeddings, std::nullopt};
  }

  Dataset load(bool with_store) const {
    auto c = resolve();
    auto samples = load_manifest(c.manifest_path, c.scheme, &warnings_sink());
    for (const auto& w : warnings_sink()) std::cerr << "warning: " << w << "\n";
    EmbeddingStore store(c.scheme.task_type());
    if (with_store) {
      if (c.embedding_dir.empty()) throw Error(ErrorCode::Config, "pass --embeddings");
      store = load_store_dir(c.embedding_dir, c.scheme.task_type());
    }
    return Dataset{c.scheme, std::move(samples), std::move(store)};
  }

  std::optional<std::string> config_preset() const {
    if (config.empty()) return std::nullopt;
    return load_dataset_config(config).preset;
  }

  static std::vector<std::string>& warnings_sink() {
    static std::vector<std::string> w;
    return w;
  }
};

struct RunFlags {
  std::string preset;
  std::string strategy = "it";
  std::string ratio;
  std::string outer_ratio;
  std::string protocol = "unlimited";
  std::string composition = "I,T";
  std::size_t shots = 4;
  std::string prompt_id = "1";
  std::string label_map = "identity";
  std::uint64_t seed = 0;
  double support_fraction = 1.0;
  unsigned threads = 1;

  std::string model = "mock-shortcut";
  HttpEndpoint http;

  CLI::Option* strategy_opt = nullptr;
  CLI::Option* protocol_opt = nullptr;
  CLI::Option* composition_opt = nullptr;

  void add_selection(CLI::App* app) {
    app->add_option("--preset", preset, "Built-in preset name (see `preset list`)");
    strategy_opt = app->add_option("--strategy", strategy, "random|i|t|a|it|ia|ta|ita|wit|wita")->capture_default_str();
    app->add_option("--ratio", ratio, "Image:text ratio for wit/wita, e.g. 2:8");
    app->add_option("--outer-ratio", outer_ratio, "(Image+text):aspect ratio for wita, e.g. 2:8");
    protocol_opt = app->add_option("--protocol", protocol,
                                   "unlimited|category-balanced|identical-to-support|ideal|contrary-to-ideal")
                       ->capture_default_str();
    app->add_option("--shots", shots, "Demonstrations per test sample")->capture_default_str();
    app->add_option("--seed", seed, "Run seed")->capture_default_str();
    app->add_option("--support-fraction", support_fraction, "Stratified support subset fraction in (0,1]")
        ->capture_default_str();
    app->add_option("--threads", threads, "Selection worker threads")->capture_default_str();
  }

  void add_sequencing(CLI::App* app) {
    composition_opt = app->add_option("--composition", composition, "Modalities, e.g. I,T or I,C,T,G")
                          ->capture_default_str();
    app->add_option("--prompt-id", prompt_id, "Prompt variant 1, 2 or 3")->capture_default_str();
    app->add_option("--label-map", label_map, "identity, animals, or Positive=dog,...")->capture_default_str();
  }

  void add_model(CLI::App* app) {
    app->add_option("--model", model, "mock-shortcut|mock-echo|http")->capture_default_str();
    app->add_option("--endpoint", http.base_url, "Model endpoint base URL (default $ICL_MODEL_ENDPOINT)");
    app->add_option("--parallel", http.parallel, "Requests in flight")->capture_default_str();
    app->add_option("--timeout-ms", http.timeout_ms, "Per-request timeout")->capture_default_str();
    app->add_option("--retries", http.retries, "Retries per request")->capture_default_str();
    app->add_option("--media-root", http.media_root, "Prefix for relative media paths");
    app->add_flag("--inline-images", http.inline_images, "Send images base64 encoded");
  }

  SimilarityStrategy make_strategy() const {
    const auto kind = parse_strategy_kind(strategy);
    if (kind == StrategyKind::WIT || kind == StrategyKind::WITA) {
      if (ratio.empty()) throw Error(ErrorCode::InvalidStrategy, strategy + " needs --ratio");
      std::optional<Ratio> outer;
      if (!outer_ratio.empty()) outer = parse_ratio(outer_ratio);
      return SimilarityStrategy(kind, parse_ratio(ratio), outer);
    }
    if (!ratio.empty() || !outer_ratio.empty()) {
      throw Error(ErrorCode::InvalidStrategy, strategy + " takes no ratio");
    }
    return SimilarityStrategy(kind, kind == StrategyKind::Random ? std::optional<std::uint64_t>(seed) : std::nullopt);
  }

  PipelineConfig make_config(const std::optional<std::string>& config_preset) const {
    PipelineConfig c;
    const auto preset_name = !preset.empty() ? std::optional<std::string>(preset) : config_preset;
    if (preset_name) c = apply_preset(c, find_preset(*preset_name));
    if (!preset_name || (strategy_opt && strategy_opt->count())) c.strategy = make_strategy();
    if (!preset_name || (protocol_opt && protocol_opt->count())) c.protocol = parse_protocol(protocol);
    if (!preset_name || (composition_opt && composition_opt->count())) {
      c.composition = ModalityComposition::parse(composition);
    }
    c.shots = shots;
    c.prompt_id = prompt_id;
    c.label_map = label_map;
    c.seed = seed;
    c.support_fraction = support_fraction;
    c.threads = threads;
    c.backend = make_backend(model, http);
    c.parallel = http.parallel;
    return c;
  }
};

void print_latency(const LatencySummary& s) {
  std::fprintf(stderr, "latency ms: retrieval %.3f  inference %.3f  total %.3f\n", s.mean_retrieval_ms,
               s.mean_inference_ms, s.mean_total_ms);
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
  } else {
    write_file(out, content);
  }
}

std::vector<SelectionResult> read_selections(const std::string& path) {
  std::vector<SelectionResult> out;
  for (const auto& j : read_jsonl(path)) out.push_back(selection_from_json(j));
  return out;
}

LabelIndex labels_of(const std::vector<Sample>& samples) {
  LabelIndex l;
  for (const auto& s : samples) l[s.id] = s.label;
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demonstration configuration for multimodal in-context sentiment classification"};
  app.require_subcommand(1);

  DataFlags data;
  RunFlags run;
  std::string out;

  // validate
  auto* validate = app.add_subcommand("validate", "Check manifest, stores and coverage for a configuration");
  bool check_files = false;
  data.add(validate, true);
  run.add_selection(validate);
  run.add_sequencing(validate);
  validate->add_flag("--check-files", check_files, "Also require image files to exist");

  // select
  auto* select_cmd = app.add_subcommand("select", "Retrieve demonstrations for every test sample");
  DataFlags select_data;
  RunFlags select_run;
  select_data.add(select_cmd, true);
  select_run.add_selection(select_cmd);
  select_cmd->add_option("--out", out, "Selections file (default stdout)");

  // build
  auto* build = app.add_subcommand("build", "Render ICL sequences from selections");
  DataFlags build_data;
  RunFlags build_run;
  std::string selections_path;
  build_data.add(build, false);
  build_run.add_sequencing(build);
  build->add_option("--selections", selections_path, "Selections file")->required();
  build->add_option("--out", out, "Sequences file (default stdout)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Send sequences through a model backend");
  DataFlags predict_data;
  RunFlags predict_run;
  std::string sequences_path;
  predict_data.add(predict_cmd, false);
  predict_run.add_model(predict_cmd);
  predict_cmd->add_option("--label-map", predict_run.label_map, "Label map used to build the sequences");
  predict_cmd->add_option("--sequences", sequences_path, "Sequences file")->required();
  predict_cmd->add_option("--out", out, "Predictions file (default stdout)");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Accuracy, per-class metrics and SLR from predictions");
  DataFlags eval_data;
  std::vector<std::string> prediction_files;
  std::vector<std::string> eval_selection_files;
  bool per_shot = false;
  eval_data.add(evaluate_cmd, false);
  evaluate_cmd->add_option("--predictions", prediction_files, "Prediction files")->required();
  evaluate_cmd->add_option("--selections", eval_selection_files, "Selection files paired with --predictions");
  evaluate_cmd->add_flag("--per-shot", per_shot, "Group reports by shot count");
  evaluate_cmd->add_option("--out", out, "Report file (default stdout)");

  // slr
  auto* slr_cmd = app.add_subcommand("slr", "Same-label rate of selections");
  DataFlags slr_data;
  std::vector<std::string> slr_files;
  bool slr_per_shot = false;
  slr_data.add(slr_cmd, false);
  slr_cmd->add_option("--selections", slr_files, "Selection files")->required();
  slr_cmd->add_flag("--per-shot", slr_per_shot, "Group by shot count");
  slr_cmd->add_option("--out", out, "Report file (default stdout)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy over a grid of wit/wita weights");
  DataFlags sweep_data;
  RunFlags sweep_run;
  std::string sweep_kind = "wit";
  std::vector<std::string> sweep_inner;
  std::vector<std::string> sweep_outer;
  std::vector<std::size_t> sweep_shots{4, 8, 16};
  sweep_data.add(sweep_cmd, true);
  sweep_run.add_selection(sweep_cmd);
  sweep_run.add_sequencing(sweep_cmd);
  sweep_run.add_model(sweep_cmd);
  sweep_cmd->add_option("--kind", sweep_kind, "wit or wita")->capture_default_str();
  sweep_cmd->add_option("--ratios", sweep_inner, "Inner ratios (default: full grid)")->delimiter(',');
  sweep_cmd->add_option("--outer-ratios", sweep_outer, "Outer ratios for wita")->delimiter(',');
  sweep_cmd->add_option("--shots-list", sweep_shots, "Shot counts")->delimiter(',');
  sweep_cmd->add_option("--out", out, "Table file (default stdout)");

  // run
  auto* run_cmd = app.add_subcommand("run", "Full pipeline: select, build, predict, evaluate");
  DataFlags run_data;
  RunFlags run_run;
  std::string out_dir;
  run_data.add(run_cmd, true);
  run_run.add_selection(run_cmd);
  run_run.add_sequencing(run_cmd);
  run_run.add_model(run_cmd);
  run_cmd->add_option("--out", out_dir, "Artifact directory")->required();

  // preset list
  auto* preset = app.add_subcommand("preset", "Built-in presets");
  preset->require_subcommand(1);
  auto* preset_list = preset->add_subcommand("list", "List presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      auto ds = data.load(true);
      auto config = run.make_config(data.config_preset());
      auto problems = validate_coverage(ds, config);
      if (check_files) {
        try {
          check_asset_paths(ds.samples, data.resolve().manifest_path.parent_path());
        } catch (const Error& e) {
          problems.emplace_back(e.what());
        }
      }
      for (const auto& p : problems) std::cerr << "invalid: " << p << "\n";
      if (!problems.empty()) return 1;
      std::cout << "ok: " << ds.samples.size() << " samples, strategy " << config.strategy.label()
                << ", composition " << config.composition.code() << "\n";
      return 0;
    }
    if (*select_cmd) {
      auto ds = select_data.load(true);
      auto config = select_run.make_config(select_data.config_preset());
      auto problems = validate_coverage(ds, config);
      if (!problems.empty()) throw Error(ErrorCode::Config, problems.front());
      auto support = config.support_fraction < 1.0
                         ? sample_support_subset(ds.samples, ds.scheme, config.support_fraction, config.seed)
                         : support_of(ds.samples);
      auto tests = test_of(ds.samples);
      std::sort(tests.begin(), tests.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
      const auto sels = select_all(tests, support, config.strategy, config.protocol, config.shots, ds.scheme,
                                   ds.store, config.seed, config.threads);
      emit(out, to_jsonl(sels));
      return 0;
    }
    if (*build) {
      auto ds = build_data.load(false);
      const auto sels = read_selections(selections_path);
      const SampleIndex index(ds.samples);
      const auto map = LabelMap::parse(build_run.label_map, ds.scheme);
      const auto comp = ModalityComposition::parse(build_run.composition);
      std::vector<IclSequence> seqs;
      for (const auto& s : sels) seqs.push_back(build_sequence(build_run.prompt_id, s, index, ds.scheme, comp, map));
      emit(out, to_jsonl(seqs));
      return 0;
    }
    if (*predict_cmd) {
      auto ds = predict_data.load(false);
      std::vector<IclSequence> seqs;
      for (const auto& j : read_jsonl(sequences_path)) seqs.push_back(sequence_from_json(j));
      const auto backend = make_backend(predict_run.model, predict_run.http);
      const auto preds = run_batch(backend, seqs, ds.scheme, LabelMap::parse(predict_run.label_map, ds.scheme),
                                   predict_run.http.parallel);
      print_latency(summarize_latency(preds));
      emit(out, to_jsonl(preds));
      return 0;
    }
    if (*evaluate_cmd) {
      auto ds = eval_data.load(false);
      const auto labels = labels_of(ds.samples);
      if (!eval_selection_files.empty() && eval_selection_files.size() != prediction_files.size()) {
        throw Error(ErrorCode::Config, "--selections must pair one-to-one with --predictions");
      }
      if (per_shot && eval_selection_files.empty()) throw Error(ErrorCode::Config, "--per-shot needs --selections");
      std::map<std::string, std::pair<PredictionMap, std::vector<SelectionResult>>> groups;
      for (std::size_t f = 0; f < prediction_files.size(); ++f) {
        std::vector<SelectionResult> sels;
        if (!eval_selection_files.empty()) sels = read_selections(eval_selection_files[f]);
        const std::string key = per_shot && !sels.empty() ? std::to_string(sels.front().shots) : "all";
        auto& g = groups[key];
        for (const auto& j : read_jsonl(prediction_files[f])) {
          auto p = prediction_from_json(j);
          if (!g.first.emplace(p.test_id, p.parsed).second) {
            throw Error(ErrorCode::DuplicateId, "prediction for '" + p.test_id + "' appears twice");
          }
        }
        g.second.insert(g.second.end(), sels.begin(), sels.end());
      }
      nlohmann::ordered_json result;
      for (auto& [key, g] : groups) {
        LabelIndex test_labels;
        for (const auto& [id, _] : g.first) {
          auto it = labels.find(id);
          if (it == labels.end()) throw Error(ErrorCode::KeySetMismatch, "no label for '" + id + "'");
          test_labels[id] = it->second;
        }
        auto report = evaluate(g.first, test_labels, ds.scheme);
        if (!g.second.empty()) {
          attach_slr(report, g.second, labels, ds.scheme);
          report.oracle = g.second.front().oracle();
          report.config["strategy"] = g.second.front().strategy;
          report.config["protocol"] = std::string(to_string(g.second.front().protocol));
          report.config["shots"] = std::to_string(g.second.front().shots);
        }
        result[key] = to_json(report);
      }
      emit(out, (per_shot ? result : result["all"]).dump(2) + "\n");
      return 0;
    }
    if (*slr_cmd) {
      auto ds = slr_data.load(false);
      const auto labels = labels_of(ds.samples);
      std::map<std::string, std::vector<SelectionResult>> groups;
      for (const auto& f : slr_files) {
        for (auto& s : read_selections(f)) {
          groups[slr_per_shot ? std::to_string(s.shots) : "all"].push_back(std::move(s));
        }
      }
      nlohmann::ordered_json result;
      for (const auto& [key, sels] : groups) {
        nlohmann::ordered_json j;
        j["shots"] = sels.front().shots;
        j["slr_overall"] = report_ratio(slr(sels, labels));
        nlohmann::ordered_json per = nlohmann::ordered_json::object();
        for (const auto& cat : ds.scheme.categories()) {
          try {
            per[cat] = report_ratio(slr(sels, labels, cat));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyCollection) throw;
            per[cat] = nullptr;
          }
        }
        j["slr_per_category"] = std::move(per);
        result[key] = std::move(j);
      }
      emit(out, (slr_per_shot ? result : result["all"]).dump(2) + "\n");
      return 0;
    }
    if (*sweep_cmd) {
      auto ds = sweep_data.load(true);
      auto config = sweep_run.make_config(sweep_data.config_preset());
      SweepSpec spec = sweep_kind == "wita" ? SweepSpec::wita_grid(sweep_shots) : SweepSpec::wit_grid(sweep_shots);
      if (!sweep_inner.empty()) {
        spec.inner.clear();
        for (const auto& r : sweep_inner) spec.inner.push_back(parse_ratio(r));
      }
      if (!sweep_outer.empty()) {
        spec.outer.clear();
        for (const auto& r : sweep_outer) spec.outer.push_back(parse_ratio(r));
      }
      const auto cells = run_sweep(spec, ds, config);
      for (const auto& c : cells) {
        if (c.error) std::cerr << "cell " << to_string(c.inner) << " x" << c.shots << ": " << *c.error << "\n";
      }
      emit(out, sweep_table(cells));
      return 0;
    }
    if (*run_cmd) {
      auto ds = run_data.load(true);
      auto config = run_run.make_config(run_data.config_preset());
      config.out_dir = out_dir;
      const auto result = run_pipeline(ds, config);
      print_latency(result.latency);
      std::printf("accuracy %.6f over %lld test samples\n", result.report.accuracy,
                  static_cast<long long>(result.report.total));
      return 0;
    }
    if (*preset_list) {
      for (const auto& p : builtin_presets()) {
        std::cout << p.name << "\t" << p.strategy.label() << "\t" << p.composition.code() << "\t"
                  << to_string(p.protocol) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
