#include "mmicl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <set>

#include "mmicl/error.hpp"
#include "mmicl/records.hpp"

namespace mmicl {

namespace {

struct SelectionStage {
  std::vector<SelectionResult> selections;
  double mean_retrieval_ms = 0.0;
};

std::vector<Sample> sorted_by_id(std::vector<Sample> v) {
  std::sort(v.begin(), v.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  return v;
}

SelectionStage select_stage(const Dataset& dataset, const PipelineConfig& config) {
  const auto problems = validate_coverage(dataset, config);
  if (!problems.empty()) throw Error(ErrorCode::Config, problems.front());
  auto support = config.support_fraction < 1.0
                     ? sample_support_subset(dataset.samples, dataset.scheme, config.support_fraction, config.seed)
                     : sorted_by_id(support_of(dataset.samples));
  const auto tests = sorted_by_id(test_of(dataset.samples));
  const auto start = std::chrono::steady_clock::now();
  SelectionStage stage;
  stage.selections = select_all(tests, support, config.strategy, config.protocol, config.shots, dataset.scheme,
                                dataset.store, config.seed, config.threads);
  const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
  stage.mean_retrieval_ms = tests.empty() ? 0.0 : elapsed.count() / static_cast<double>(tests.size());
  return stage;
}

PipelineResult finish_pipeline(const Dataset& dataset, const PipelineConfig& config, SelectionStage stage) {
  PipelineResult result;
  result.selections = std::move(stage.selections);
  const SampleIndex index(dataset.samples);
  const auto label_map = LabelMap::parse(config.label_map, dataset.scheme);
  result.sequences.reserve(result.selections.size());
  for (const auto& sel : result.selections) {
    result.sequences.push_back(
        build_sequence(config.prompt_id, sel, index, dataset.scheme, config.composition, label_map));
  }
  result.predictions = run_batch(config.backend, result.sequences, dataset.scheme, label_map, config.parallel);

  PredictionMap predictions;
  LabelIndex test_labels;
  LabelIndex all_labels;
  for (const auto& s : dataset.samples) all_labels[s.id] = s.label;
  for (const auto& p : result.predictions) {
    predictions[p.test_id] = p.parsed;
    test_labels[p.test_id] = all_labels.at(p.test_id);
  }
  if (!predictions.empty()) {
    result.report = evaluate(predictions, test_labels, dataset.scheme);
    attach_slr(result.report, result.selections, all_labels, dataset.scheme);
  }
  result.report.oracle = is_oracle(config.protocol);
  result.report.config = config.echo();
  result.latency = summarize_latency(result.predictions, {stage.mean_retrieval_ms});

  if (config.out_dir) {
    const auto& dir = *config.out_dir;
    write_file(dir / "selections.jsonl", to_jsonl(result.selections));
    write_file(dir / "sequences.jsonl", to_jsonl(result.sequences));
    write_file(dir / "predictions.jsonl", to_jsonl(result.predictions));
    write_file(dir / "report.json", to_json(result.report).dump(2) + "\n");
  }
  return result;
}

std::string fmt_fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

const std::vector<Preset>& builtin_presets() {
  static const std::vector<Preset> presets = [] {
    const SimilarityStrategy wit(StrategyKind::WIT, Ratio{2, 8});
    const SimilarityStrategy wita(StrategyKind::WITA, Ratio{7, 3}, Ratio{2, 8});
    const auto it = ModalityComposition::parse("I,T");
    return std::vector<Preset>{
        {"MVSA-S", wit, it, ProtocolKind::Unlimited},
        {"MVSA-M", wit, it, ProtocolKind::Unlimited},
        {"TumEmo", wit, it, ProtocolKind::Unlimited},
        {"Twitter-15", wita, it, ProtocolKind::CategoryBalanced},
        {"Twitter-17", wita, it, ProtocolKind::CategoryBalanced},
        {"MASAD", wita, it, ProtocolKind::Unlimited},
    };
  }();
  return presets;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::Config, "unknown preset '" + std::string(name) + "'");
}

Dataset load_dataset(const DatasetConfig& config) {
  auto samples = load_manifest(config.manifest_path, config.scheme);
  auto store = load_store_dir(config.embedding_dir, config.scheme.task_type());
  return Dataset{config.scheme, std::move(samples), std::move(store)};
}

std::map<std::string, std::string> PipelineConfig::echo() const {
  char fraction[32];
  std::snprintf(fraction, sizeof fraction, "%g", support_fraction);
  return {
      {"strategy", strategy.label()},
      {"protocol", std::string(to_string(protocol))},
      {"composition", composition.code()},
      {"shots", std::to_string(shots)},
      {"prompt_id", prompt_id},
      {"label_map", label_map},
      {"seed", std::to_string(seed)},
      {"support_fraction", fraction},
      {"model", backend_name(backend)},
  };
}

PipelineConfig apply_preset(PipelineConfig config, const Preset& preset) {
  config.strategy = preset.strategy;
  config.composition = preset.composition;
  config.protocol = preset.protocol;
  return config;
}

std::vector<std::string> validate_coverage(const Dataset& dataset, const PipelineConfig& config) {
  std::vector<std::string> problems;
  try {
    config.strategy.check_task(dataset.scheme.task_type());
  } catch (const Error& e) {
    problems.emplace_back(e.what());
    return problems;
  }
  std::vector<std::string> ids;
  ids.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) ids.push_back(s.id);
  for (auto c : config.strategy.channels()) {
    auto missing = dataset.store.missing(c, ids);
    if (!dataset.store.has(c)) {
      problems.push_back("channel " + std::string(to_string(c)) + " is not loaded");
    } else if (!missing.empty()) {
      problems.push_back("channel " + std::string(to_string(c)) + ": " + std::to_string(missing.size()) +
                         " ids missing, first '" + missing.front() + "'");
    }
  }
  for (const auto& s : dataset.samples) {
    if (config.composition.has(Modality::Caption) && !s.caption) {
      problems.push_back("sample '" + s.id + "' has no caption");
    }
    if (config.composition.has(Modality::GeneratedImage) && !s.gen_image_ref) {
      problems.push_back("sample '" + s.id + "' has no generated image");
    }
  }
  try {
    LabelMap::parse(config.label_map, dataset.scheme);
    render_prompt(config.prompt_id, dataset.scheme.task_type(), LabelMap::identity(dataset.scheme), false);
  } catch (const Error& e) {
    problems.emplace_back(e.what());
  }
  return problems;
}

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config) {
  return finish_pipeline(dataset, config, select_stage(dataset, config));
}

SweepSpec SweepSpec::wit_grid(std::vector<std::size_t> shots) {
  SweepSpec s;
  s.kind = StrategyKind::WIT;
  for (int a = 0; a <= 10; ++a) s.inner.push_back(Ratio{static_cast<double>(a), static_cast<double>(10 - a)});
  s.shots = std::move(shots);
  return s;
}

SweepSpec SweepSpec::wita_grid(std::vector<std::size_t> shots) {
  SweepSpec s;
  s.kind = StrategyKind::WITA;
  for (int a : {1, 3, 5, 7, 9}) s.inner.push_back(Ratio{static_cast<double>(a), static_cast<double>(10 - a)});
  s.outer = {Ratio{8, 2}, Ratio{5, 5}, Ratio{2, 8}};
  s.shots = std::move(shots);
  return s;
}

std::vector<SweepCell> run_sweep(const SweepSpec& sweep, const Dataset& dataset, const PipelineConfig& base) {
  if (sweep.inner.empty() || sweep.shots.empty()) throw Error(ErrorCode::InvalidArgument, "empty sweep grid");
  if (sweep.kind == StrategyKind::WITA && sweep.outer.empty()) {
    throw Error(ErrorCode::InvalidArgument, "wita sweep needs outer ratios");
  }
  if (sweep.kind != StrategyKind::WIT && sweep.kind != StrategyKind::WITA) {
    throw Error(ErrorCode::InvalidArgument, "sweeps vary wit or wita weights");
  }
  std::vector<std::pair<Ratio, std::optional<Ratio>>> ratios;
  for (const auto& in : sweep.inner) {
    if (sweep.kind == StrategyKind::WIT) {
      ratios.emplace_back(in, std::nullopt);
    } else {
      for (const auto& out : sweep.outer) ratios.emplace_back(in, out);
    }
  }

  // Cells whose normalised weights coincide share one selection pass.
  std::map<std::tuple<double, double, double, std::size_t>, SelectionStage> cache;
  std::vector<SweepCell> cells;
  for (const auto& [inner, outer] : ratios) {
    for (auto shots : sweep.shots) {
      SweepCell cell{inner, outer, shots, std::nullopt, std::nullopt};
      try {
        PipelineConfig config = base;
        config.strategy = SimilarityStrategy(sweep.kind, inner, outer);
        config.shots = shots;
        config.out_dir.reset();
        const auto& w = config.strategy.weights();
        const auto key = std::make_tuple(w.image, w.text, w.aspect, shots);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, select_stage(dataset, config)).first;
        auto stage = it->second;
        for (auto& sel : stage.selections) sel.strategy = config.strategy.label();
        cell.accuracy = finish_pipeline(dataset, config, std::move(stage)).report.accuracy;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::string sweep_table(const std::vector<SweepCell>& cells) {
  std::vector<std::size_t> shots;
  std::vector<std::string> rows;
  std::map<std::pair<std::string, std::size_t>, std::string> value;
  for (const auto& c : cells) {
    auto label = to_string(c.inner);
    if (c.outer) label += ";" + to_string(*c.outer);
    if (std::find(rows.begin(), rows.end(), label) == rows.end()) rows.push_back(label);
    if (std::find(shots.begin(), shots.end(), c.shots) == shots.end()) shots.push_back(c.shots);
    value[{label, c.shots}] = c.accuracy ? fmt_fixed6(*c.accuracy) : "error";
  }
  std::string out = "ratio";
  for (auto s : shots) out += "\t" + std::to_string(s) + "-shot";
  out += '\n';
  for (const auto& r : rows) {
    out += r;
    for (auto s : shots) {
      auto it = value.find({r, s});
      out += "\t" + (it == value.end() ? std::string("-") : it->second);
    }
    out += '\n';
  }
  return out;
}

}  // namespace mmicl
