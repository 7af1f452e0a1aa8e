#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmicl/corpus.hpp"
#include "mmicl/embedding_store.hpp"
#include "mmicl/similarity.hpp"

namespace mmicl {

enum class ProtocolKind { Unlimited, CategoryBalanced, IdenticalToSupportSet, Ideal, ContraryToIdeal };

std::string_view to_string(ProtocolKind p);
ProtocolKind parse_protocol(std::string_view s);

/// Oracle protocols read the test label and only measure ceilings/floors.
constexpr bool is_oracle(ProtocolKind p) {
  return p == ProtocolKind::Ideal || p == ProtocolKind::ContraryToIdeal;
}

struct RankedCandidate {
  std::string id;
  SimilarityScore score;
};

struct SelectionResult {
  std::string test_id;
  std::size_t shots = 0;
  std::string strategy;
  ProtocolKind protocol = ProtocolKind::Unlimited;
  // Ascending score, ties by ascending id.
  std::vector<RankedCandidate> demos;
  // Category -> realised count, scheme order. Empty for zero-shot.
  std::vector<std::pair<std::string, std::size_t>> allocation;
  std::vector<std::string> warnings;

  bool oracle() const { return is_oracle(protocol); }
};

/// Scores every support sample against `test`; descending score, then
/// ascending id. Samples sharing the test id are skipped.
std::vector<RankedCandidate> rank_candidates(const Sample& test,
                                             std::span<const Sample> support,
                                             const SimilarityStrategy& strategy,
                                             const EmbeddingStore& store);

/// Per-category quota for `protocol`.
///
/// `next_best` holds, per scheme category, the score of the best candidate
/// left after the equal CategoryBalanced share (nullopt when the category has
/// no such candidate). It decides which categories receive the k mod C
/// remainder and is ignored by the other protocols. Unlimited yields an empty
/// map.
std::map<std::string, std::size_t> allocate_counts(
    ProtocolKind protocol, std::size_t shots, const SentimentScheme& scheme,
    const std::map<std::string, std::size_t>& support_counts,
    const std::optional<std::string>& test_label,
    const std::vector<std::optional<double>>& next_best = {});

/// Largest-remainder apportionment of `total` by `weights`, ties to the lower index.
std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const std::size_t> weights);

/// Stable per-sample seed derived from the run seed and the sample id.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view id);

SelectionResult select(const Sample& test, std::span<const Sample> support,
                       const SimilarityStrategy& strategy, ProtocolKind protocol,
                       std::size_t shots, const SentimentScheme& scheme,
                       const EmbeddingStore& store, std::uint64_t seed = 0);

/// Runs `select` for every test sample, `threads` at a time. Output order
/// follows `tests`.
std::vector<SelectionResult> select_all(std::span<const Sample> tests, std::span<const Sample> support,
                                        const SimilarityStrategy& strategy, ProtocolKind protocol,
                                        std::size_t shots, const SentimentScheme& scheme,
                                        const EmbeddingStore& store, std::uint64_t seed = 0,
                                        unsigned threads = 1);

}  // namespace mmicl
