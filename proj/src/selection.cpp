#include "mmicl/selection.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "mmicl/error.hpp"
#include "mmicl/linalg.hpp"
#include "text_util.hpp"

namespace mmicl {

namespace {

struct Scored {
  std::size_t index;  // into support
  SimilarityScore score;
};

struct ChannelProbe {
  Channel channel;
  const ChannelStore* store;
  Eigen::Index test_row;
  double test_norm;
};

// Exhaustive scoring of every support sample except the test sample itself.
std::vector<Scored> score_all(const Sample& test, std::span<const Sample> support,
                              const SimilarityStrategy& strategy, const EmbeddingStore& store) {
  strategy.check_task(store.task_type());
  std::vector<ChannelProbe> probes;
  for (auto c : strategy.channels()) {
    const auto& ch = store.channel(c);
    const auto r = store.require_row(c, test.id);
    probes.push_back({c, &ch, r, ch.norm(r)});
  }

  std::vector<Scored> out;
  out.reserve(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto& cand = support[i];
    if (cand.id == test.id) continue;
    SimilarityScore s;
    for (const auto& p : probes) {
      const auto r = store.require_row(p.channel, cand.id);
      const double k = cosine_from(dot(p.store->row(p.test_row), p.store->row(r)), p.test_norm, p.store->norm(r));
      switch (p.channel) {
        case Channel::Image: s.image = k; break;
        case Channel::Text: s.text = k; break;
        case Channel::Aspect: s.aspect = k; break;
        default: break;
      }
    }
    s.value = combine(strategy, s.image.value_or(0.0), s.text.value_or(0.0), s.aspect.value_or(0.0));
    out.push_back({i, s});
  }
  return out;
}

void sort_descending(std::vector<Scored>& v, std::span<const Sample> support) {
  std::sort(v.begin(), v.end(), [&](const Scored& a, const Scored& b) {
    if (a.score.value != b.score.value) return a.score.value > b.score.value;
    return support[a.index].id < support[b.index].id;
  });
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::Unlimited: return "unlimited";
    case ProtocolKind::CategoryBalanced: return "category-balanced";
    case ProtocolKind::IdenticalToSupportSet: return "identical-to-support";
    case ProtocolKind::Ideal: return "ideal";
    case ProtocolKind::ContraryToIdeal: return "contrary-to-ideal";
  }
  return "?";
}

ProtocolKind parse_protocol(std::string_view s) {
  auto v = detail::lower(detail::trim(s));
  std::replace(v.begin(), v.end(), '_', '-');
  std::replace(v.begin(), v.end(), ' ', '-');
  if (v == "unlimited") return ProtocolKind::Unlimited;
  if (v == "category-balanced" || v == "balanced") return ProtocolKind::CategoryBalanced;
  if (v == "identical-to-support" || v == "identical-to-support-set" || v == "identical") {
    return ProtocolKind::IdenticalToSupportSet;
  }
  if (v == "ideal") return ProtocolKind::Ideal;
  if (v == "contrary-to-ideal" || v == "contrary") return ProtocolKind::ContraryToIdeal;
  throw Error(ErrorCode::InvalidArgument, "unknown protocol '" + std::string(s) + "'");
}

std::vector<RankedCandidate> rank_candidates(const Sample& test, std::span<const Sample> support,
                                             const SimilarityStrategy& strategy, const EmbeddingStore& store) {
  if (strategy.kind() == StrategyKind::Random) {
    throw Error(ErrorCode::InvalidStrategy, "random retrieval has no ranking");
  }
  if (support.empty()) throw Error(ErrorCode::EmptySupport, "no candidates to rank");
  auto scored = score_all(test, support, strategy, store);
  sort_descending(scored, support);
  std::vector<RankedCandidate> out;
  out.reserve(scored.size());
  for (auto& s : scored) out.push_back({support[s.index].id, s.score});
  return out;
}

std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const std::size_t> weights) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n, 0);
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  if (sum == 0 || n == 0) return out;
  std::vector<std::size_t> rem(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = total * weights[i] / sum;
    rem[i] = total * weights[i] % sum;
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++out[order[r]];
  return out;
}

std::map<std::string, std::size_t> allocate_counts(ProtocolKind protocol, std::size_t shots,
                                                   const SentimentScheme& scheme,
                                                   const std::map<std::string, std::size_t>& support_counts,
                                                   const std::optional<std::string>& test_label,
                                                   const std::vector<std::optional<double>>& next_best) {
  const auto& cats = scheme.categories();
  const std::size_t c = cats.size();
  std::map<std::string, std::size_t> out;
  if (is_oracle(protocol)) {
    if (!test_label) throw Error(ErrorCode::MissingTestLabel, "oracle protocol needs the test label");
    scheme.index_of(*test_label);
  }
  auto count_of = [&](const std::string& cat) {
    auto it = support_counts.find(cat);
    return it == support_counts.end() ? std::size_t{0} : it->second;
  };

  switch (protocol) {
    case ProtocolKind::Unlimited:
      return out;

    case ProtocolKind::CategoryBalanced: {
      const std::size_t base = shots / c;
      const std::size_t extra = shots % c;
      std::vector<std::size_t> order(c);
      std::iota(order.begin(), order.end(), std::size_t{0});
      auto priority = [&](std::size_t i) -> std::optional<double> {
        return i < next_best.size() ? next_best[i] : std::nullopt;
      };
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto pa = priority(a);
        const auto pb = priority(b);
        if (pa.has_value() != pb.has_value()) return pa.has_value();
        if (pa && *pa != *pb) return *pa > *pb;
        return false;
      });
      for (const auto& cat : cats) out[cat] = base;
      for (std::size_t r = 0; r < extra; ++r) ++out[cats[order[r]]];
      return out;
    }

    case ProtocolKind::IdenticalToSupportSet: {
      std::vector<std::size_t> w(c);
      for (std::size_t i = 0; i < c; ++i) w[i] = count_of(cats[i]);
      if (std::accumulate(w.begin(), w.end(), std::size_t{0}) == 0) {
        throw Error(ErrorCode::EmptySupport, "support set has no labelled samples");
      }
      const auto q = largest_remainder(shots, w);
      for (std::size_t i = 0; i < c; ++i) out[cats[i]] = q[i];
      return out;
    }

    case ProtocolKind::Ideal:
      for (const auto& cat : cats) out[cat] = cat == *test_label ? shots : 0;
      return out;

    case ProtocolKind::ContraryToIdeal: {
      std::vector<std::size_t> w(c);
      for (std::size_t i = 0; i < c; ++i) w[i] = cats[i] == *test_label ? 0 : count_of(cats[i]);
      const auto q = largest_remainder(shots, w);
      for (std::size_t i = 0; i < c; ++i) out[cats[i]] = q[i];
      return out;
    }
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : id) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return splitmix64(seed ^ splitmix64(h));
}

SelectionResult select(const Sample& test, std::span<const Sample> support, const SimilarityStrategy& strategy,
                       ProtocolKind protocol, std::size_t shots, const SentimentScheme& scheme,
                       const EmbeddingStore& store, std::uint64_t seed) {
  if (support.empty()) throw Error(ErrorCode::EmptySupport, "no support samples");
  SelectionResult result;
  result.test_id = test.id;
  result.shots = shots;
  result.strategy = strategy.label();
  result.protocol = protocol;
  if (is_oracle(protocol) && test.label.empty()) {
    throw Error(ErrorCode::MissingTestLabel, "oracle protocol needs the label of '" + test.id + "'");
  }
  if (shots == 0) return result;

  const bool random = strategy.kind() == StrategyKind::Random;
  // Random retrieval still needs scores to order the drawn demonstrations.
  const SimilarityStrategy ordering = random ? SimilarityStrategy(StrategyKind::IT) : strategy;
  auto scored = score_all(test, support, ordering, store);
  if (random) {
    std::sort(scored.begin(), scored.end(),
              [&](const Scored& a, const Scored& b) { return support[a.index].id < support[b.index].id; });
    std::mt19937_64 rng(derive_seed(strategy.seed().value_or(seed), test.id));
    std::shuffle(scored.begin(), scored.end(), rng);
  } else {
    sort_descending(scored, support);
  }

  const auto& cats = scheme.categories();
  const std::size_t c = cats.size();
  std::vector<std::vector<std::size_t>> pools(c);  // positions in `scored`, priority order
  std::map<std::string, std::size_t> support_counts;
  for (std::size_t pos = 0; pos < scored.size(); ++pos) {
    const auto& label = support[scored[pos].index].label;
    pools[scheme.index_of(label)].push_back(pos);
  }
  for (const auto& s : support) ++support_counts[s.label];

  std::vector<bool> eligible(c, true);
  if (protocol == ProtocolKind::Ideal || protocol == ProtocolKind::ContraryToIdeal) {
    const auto t = scheme.index_of(test.label);
    for (std::size_t i = 0; i < c; ++i) eligible[i] = (protocol == ProtocolKind::Ideal) == (i == t);
  }

  std::vector<std::optional<double>> next_best(c);
  const std::size_t base = shots / c;
  for (std::size_t i = 0; i < c; ++i) {
    if (pools[i].size() > base) next_best[i] = scored[pools[i][base]].score.value;
  }

  std::vector<bool> used(scored.size(), false);
  std::vector<std::size_t> picked;
  if (protocol == ProtocolKind::Unlimited) {
    for (std::size_t pos = 0; pos < scored.size() && picked.size() < shots; ++pos) {
      picked.push_back(pos);
      used[pos] = true;
    }
  } else {
    const auto alloc = allocate_counts(protocol, shots, scheme, support_counts, test.label, next_best);
    for (std::size_t i = 0; i < c; ++i) {
      const std::size_t want = alloc.at(cats[i]);
      const std::size_t got = std::min(want, pools[i].size());
      for (std::size_t j = 0; j < got; ++j) {
        picked.push_back(pools[i][j]);
        used[pools[i][j]] = true;
      }
      if (got < want) {
        result.warnings.push_back("Shortfall: category " + cats[i] + " has " + std::to_string(got) + " of " +
                                  std::to_string(want) + " requested candidates");
      }
    }
    if (picked.size() < shots) {
      std::size_t filled = 0;
      for (std::size_t pos = 0; pos < scored.size() && picked.size() < shots; ++pos) {
        if (used[pos] || !eligible[scheme.index_of(support[scored[pos].index].label)]) continue;
        picked.push_back(pos);
        used[pos] = true;
        ++filled;
      }
      if (filled > 0) {
        result.warnings.push_back("Shortfall: backfilled " + std::to_string(filled) +
                                  " demonstrations from the global ranking");
      }
    }
  }
  if (picked.size() < shots) {
    result.warnings.push_back("Shortfall: only " + std::to_string(picked.size()) + " of " + std::to_string(shots) +
                              " demonstrations available");
  }

  for (auto pos : picked) result.demos.push_back({support[scored[pos].index].id, scored[pos].score});
  std::sort(result.demos.begin(), result.demos.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score.value != b.score.value) return a.score.value < b.score.value;
    return a.id < b.id;
  });

  std::vector<std::size_t> realized(c, 0);
  for (auto pos : picked) ++realized[scheme.index_of(support[scored[pos].index].label)];
  for (std::size_t i = 0; i < c; ++i) result.allocation.emplace_back(cats[i], realized[i]);
  return result;
}

std::vector<SelectionResult> select_all(std::span<const Sample> tests, std::span<const Sample> support,
                                        const SimilarityStrategy& strategy, ProtocolKind protocol, std::size_t shots,
                                        const SentimentScheme& scheme, const EmbeddingStore& store,
                                        std::uint64_t seed, unsigned threads) {
  std::vector<SelectionResult> out(tests.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(tests.size(), 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < tests.size(); ++i) {
      out[i] = select(tests[i], support, strategy, protocol, shots, scheme, store, seed);
    }
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const auto i = next.fetch_add(1);
      if (i >= tests.size()) return;
      try {
        out[i] = select(tests[i], support, strategy, protocol, shots, scheme, store, seed);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace mmicl
