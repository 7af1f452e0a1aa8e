#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmicl/corpus.hpp"
#include "mmicl/embedding_store.hpp"

namespace mmicl {

enum class StrategyKind { Random, I, T, A, IT, IA, TA, ITA, WIT, WITA };

std::string_view to_string(StrategyKind k);
StrategyKind parse_strategy_kind(std::string_view s);

/// A two-term ratio such as 2:8. Only the proportion matters.
struct Ratio {
  double first = 0.0;
  double second = 0.0;

  bool operator==(const Ratio&) const = default;
};

Ratio parse_ratio(std::string_view s);
std::string to_string(const Ratio& r);

struct Weights {
  double image = 0.0;
  double text = 0.0;
  double aspect = 0.0;

  bool operator==(const Weights&) const = default;
};

/// Splits unit mass between (image+text) and aspect by `outer`, then between
/// image and text by `inner`. Without `outer` the aspect weight is zero.
Weights resolve_weights(const Ratio& inner, const std::optional<Ratio>& outer = std::nullopt);

class SimilarityStrategy {
 public:
  /// Unweighted kinds (Random, I, T, A, IT, IA, TA, ITA).
  explicit SimilarityStrategy(StrategyKind kind, std::optional<std::uint64_t> seed = std::nullopt);
  /// WIT from an image:text ratio, or WITA with an additional outer ratio.
  SimilarityStrategy(StrategyKind kind, const Ratio& inner,
                     const std::optional<Ratio>& outer = std::nullopt);
  /// WIT/WITA from raw non-negative weights, normalised to sum one.
  static SimilarityStrategy weighted(StrategyKind kind, Weights raw);

  StrategyKind kind() const { return kind_; }
  const Weights& weights() const { return weights_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  const std::optional<Ratio>& inner_ratio() const { return inner_; }
  const std::optional<Ratio>& outer_ratio() const { return outer_; }

  bool uses(Channel c) const;
  bool needs_aspect() const { return uses(Channel::Aspect); }
  std::vector<Channel> channels() const;

  /// Rejects aspect strategies on post-level data.
  void check_task(TaskType t) const;

  /// Human readable label, e.g. "wita[7:3;2:8]".
  std::string label() const;

 private:
  SimilarityStrategy() = default;

  StrategyKind kind_ = StrategyKind::IT;
  Weights weights_;
  std::optional<std::uint64_t> seed_;
  std::optional<Ratio> inner_;
  std::optional<Ratio> outer_;
};

struct SimilarityScore {
  double value = 0.0;
  std::optional<double> image;
  std::optional<double> text;
  std::optional<double> aspect;
};

/// Combines per-channel cosines according to the strategy formula.
double combine(const SimilarityStrategy& strategy, double k_image, double k_text, double k_aspect);

SimilarityScore score(const SimilarityStrategy& strategy, const Sample& test,
                      const Sample& candidate, const EmbeddingStore& store);

}  // namespace mmicl
