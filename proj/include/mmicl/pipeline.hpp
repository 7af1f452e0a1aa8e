#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmicl/corpus.hpp"
#include "mmicl/embedding_store.hpp"
#include "mmicl/metrics.hpp"
#include "mmicl/model_gateway.hpp"
#include "mmicl/selection.hpp"
#include "mmicl/sequencing.hpp"
#include "mmicl/similarity.hpp"

namespace mmicl {

struct Preset {
  std::string name;
  SimilarityStrategy strategy;
  ModalityComposition composition;
  ProtocolKind protocol;
};

/// The six built-in dataset presets.
const std::vector<Preset>& builtin_presets();
const Preset& find_preset(std::string_view name);

struct Dataset {
  SentimentScheme scheme;
  std::vector<Sample> samples;
  EmbeddingStore store;
};

Dataset load_dataset(const DatasetConfig& config);

struct PipelineConfig {
  SimilarityStrategy strategy{StrategyKind::IT};
  ProtocolKind protocol = ProtocolKind::Unlimited;
  ModalityComposition composition = ModalityComposition::parse("I,T");
  std::size_t shots = 4;
  std::string prompt_id = "1";
  std::string label_map = "identity";
  std::uint64_t seed = 0;
  double support_fraction = 1.0;
  ModelBackend backend = MockShortcutMajority{};
  unsigned parallel = 1;  // gateway requests in flight
  unsigned threads = 1;   // selection workers
  std::optional<std::filesystem::path> out_dir;

  std::map<std::string, std::string> echo() const;
};

/// Returns a config with strategy, composition and protocol taken from `preset`.
PipelineConfig apply_preset(PipelineConfig config, const Preset& preset);

/// Checks that the store covers every id and channel the configuration needs
/// and that every sample carries the assets the composition renders.
/// Returns human readable problems; empty means valid.
std::vector<std::string> validate_coverage(const Dataset& dataset, const PipelineConfig& config);

struct PipelineResult {
  EvaluationReport report;
  std::vector<SelectionResult> selections;
  std::vector<IclSequence> sequences;
  std::vector<Prediction> predictions;
  LatencySummary latency;
};

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config);

struct SweepSpec {
  StrategyKind kind = StrategyKind::WIT;
  std::vector<Ratio> inner;
  std::vector<Ratio> outer;  // WITA only
  std::vector<std::size_t> shots;

  /// WIT grid 0:10, 1:9, ..., 10:0.
  static SweepSpec wit_grid(std::vector<std::size_t> shots);
  /// WITA grid {1:9,3:7,5:5,7:3,9:1} x {8:2,5:5,2:8}.
  static SweepSpec wita_grid(std::vector<std::size_t> shots);
};

struct SweepCell {
  Ratio inner;
  std::optional<Ratio> outer;
  std::size_t shots = 0;
  std::optional<double> accuracy;
  std::optional<std::string> error;
};

std::vector<SweepCell> run_sweep(const SweepSpec& sweep, const Dataset& dataset, const PipelineConfig& base);

/// Tab separated table: one row per ratio, one accuracy column per shot count.
std::string sweep_table(const std::vector<SweepCell>& cells);

}  // namespace mmicl
