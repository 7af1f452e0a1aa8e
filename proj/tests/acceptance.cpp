// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mmicl/linalg.hpp"
#include "mmicl/pipeline.hpp"
#include "mmicl/records.hpp"
#include "support/golden.hpp"
#include "support/oracle.hpp"
#include "support/synthetic.hpp"

using namespace mmicl;
using namespace mmicl::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

class Check {
 public:
  void require(bool cond, const std::string& what) {
    if (!cond && failures_++ < 5) first_ += (first_.empty() ? "" : "; ") + what;
  }
  Outcome done(std::string detail) const {
    if (failures_ == 0) return {true, std::move(detail)};
    return {false, std::to_string(failures_) + " violations, e.g. " + first_};
  }

 private:
  std::size_t failures_ = 0;
  std::string first_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> ids_of(const SelectionResult& r) {
  std::vector<std::string> out;
  for (const auto& d : r.demos) out.push_back(d.id);
  return out;
}

std::vector<std::string> ranked_ids(const std::vector<RankedCandidate>& r) {
  std::vector<std::string> out;
  for (const auto& c : r) out.push_back(c.id);
  return out;
}

LabelIndex labels_of(const Dataset& ds) {
  LabelIndex out;
  for (const auto& s : ds.samples) out[s.id] = s.label;
  return out;
}

// --- criteria ---------------------------------------------------------------

Outcome slr_worked_example() {
  LabelIndex labels = {{"t1", "Neutral"}, {"t2", "Neutral"}};
  const char* demo_labels[2][6] = {{"Neutral", "Neutral", "Neutral", "Neutral", "Positive", "Negative"},
                                   {"Neutral", "Neutral", "Neutral", "Negative", "Negative", "Positive"}};
  std::vector<SelectionResult> sel(2);
  for (int t = 0; t < 2; ++t) {
    sel[t].test_id = "t" + std::to_string(t + 1);
    sel[t].shots = 6;
    for (int d = 0; d < 6; ++d) {
      const auto id = "d" + std::to_string(t) + std::to_string(d);
      labels[id] = demo_labels[t][d];
      sel[t].demos.push_back({id, {}});
    }
  }
  const double v = slr(sel, labels, std::string("Neutral"));
  return {v == 7.0 / 12.0, "SLR-Neutral = " + fmt("%.17g", v) + ", expected 7/12"};
}

std::vector<SimilarityStrategy> scored_strategies(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> term(0, 10);
  auto ratio = [&] {
    Ratio r{double(term(rng)), double(term(rng))};
    if (r.first + r.second == 0) r.first = 1;
    return r;
  };
  std::vector<SimilarityStrategy> out;
  for (auto k : {StrategyKind::I, StrategyKind::T, StrategyKind::A, StrategyKind::IT, StrategyKind::IA,
                 StrategyKind::TA, StrategyKind::ITA})
    out.emplace_back(k);
  const auto inner = ratio();
  out.emplace_back(StrategyKind::WIT, inner);
  out.emplace_back(StrategyKind::WITA, ratio(), ratio());
  return out;
}

OracleWeights weights_for(const SimilarityStrategy& s) {
  if (s.kind() == StrategyKind::WIT || s.kind() == StrategyKind::WITA) {
    const auto in = *s.inner_ratio();
    const auto out = s.outer_ratio().value_or(Ratio{1, 0});
    return oracle_weights(s.kind(), in.first, in.second, out.first, out.second);
  }
  return oracle_weights(s.kind());
}

Outcome oracle_equivalence() {
  Check check;
  std::mt19937_64 rng(2024);
  std::size_t compared = 0;
  for (int corpus = 0; corpus < 50; ++corpus) {
    SyntheticSpec spec;
    spec.support = std::uniform_int_distribution<std::size_t>(20, 1000)(rng);
    spec.test = 4;
    spec.dim = std::uniform_int_distribution<Eigen::Index>(8, 64)(rng);
    spec.clustering = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
    spec.seed = rng();
    const auto ds = make_synthetic(spec);
    const auto support = sorted_support(ds);
    const auto tests = sorted_tests(ds);
    for (const auto& strategy : scored_strategies(rng)) {
      const auto w = weights_for(strategy);
      for (const auto& t : tests) {
        const auto oracle = oracle_rank(ds, t, support, w);
        for (std::size_t k : {1, 4, 8, 16}) {
          const auto got = select(t, support, strategy, ProtocolKind::Unlimited, k, ds.scheme, ds.store);
          check.require(ids_of(got) == oracle_topk_ascending(oracle, k),
                        "corpus " + std::to_string(corpus) + " " + strategy.label() + " k=" + std::to_string(k));
          ++compared;
        }
      }
    }
    // Random draws have no score oracle: check membership, size and the IT ordering of the draw.
    for (const auto& t : tests) {
      const auto got = select(t, support, SimilarityStrategy(StrategyKind::Random), ProtocolKind::Unlimited, 8,
                              ds.scheme, ds.store, 17);
      const auto it = oracle_rank(ds, t, support, oracle_weights(StrategyKind::IT));
      std::vector<OracleHit> drawn;
      for (const auto& d : got.demos) {
        auto hit = std::find_if(it.begin(), it.end(), [&](const OracleHit& h) { return h.id == d.id; });
        check.require(hit != it.end(), "random draw outside support");
        if (hit != it.end()) drawn.push_back(*hit);
      }
      check.require(got.demos.size() == std::min<std::size_t>(8, support.size()), "random draw size");
      check.require(ids_of(got) == oracle_topk_ascending(drawn, drawn.size()), "random draw ordering");
    }
  }
  return check.done(std::to_string(compared) + " selections over 50 corpora match the exhaustive oracle");
}

Outcome rank_equivalence() {
  Check check;
  std::mt19937_64 rng(77);
  for (int corpus = 0; corpus < 20; ++corpus) {
    SyntheticSpec spec;
    spec.support = std::uniform_int_distribution<std::size_t>(50, 600)(rng);
    spec.test = 3;
    spec.dim = std::uniform_int_distribution<Eigen::Index>(8, 64)(rng);
    spec.clustering = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
    spec.seed = rng();
    const auto ds = make_synthetic(spec);
    const auto support = sorted_support(ds);
    auto rank = [&](const Sample& t, const SimilarityStrategy& s) {
      return ranked_ids(rank_candidates(t, support, s, ds.store));
    };
    const double scale = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    const double a = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
    const double b = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
    const double c = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
    for (const auto& t : sorted_tests(ds)) {
      const auto tag = " (corpus " + std::to_string(corpus) + ", " + t.id + ")";
      check.require(rank(t, SimilarityStrategy(StrategyKind::WIT, Ratio{10, 0})) == rank(t, SimilarityStrategy(StrategyKind::I)),
                    "WIT(10:0) != I" + tag);
      check.require(rank(t, SimilarityStrategy(StrategyKind::WIT, Ratio{0, 10})) == rank(t, SimilarityStrategy(StrategyKind::T)),
                    "WIT(0:10) != T" + tag);
      check.require(rank(t, SimilarityStrategy(StrategyKind::WITA, Ratio{1, 1}, Ratio{2, 1})) ==
                        rank(t, SimilarityStrategy(StrategyKind::ITA)),
                    "equal-weight WITA != ITA" + tag);
      check.require(rank(t, SimilarityStrategy::weighted(StrategyKind::WITA, {a, b, c})) ==
                        rank(t, SimilarityStrategy::weighted(StrategyKind::WITA, {a * scale, b * scale, c * scale})),
                    "WITA not scale invariant" + tag);
      check.require(rank(t, SimilarityStrategy::weighted(StrategyKind::WIT, {a, b, 0})) ==
                        rank(t, SimilarityStrategy::weighted(StrategyKind::WIT, {a * scale, b * scale, 0})),
                    "WIT not scale invariant" + tag);
    }
  }
  return check.done("5 equivalences hold as argsort equality on 20 corpora");
}

Outcome protocol_suite() {
  Check check;
  std::mt19937_64 rng(31);
  std::size_t selections = 0;
  for (int corpus = 0; corpus < 20; ++corpus) {
    SyntheticSpec spec;
    spec.support = std::uniform_int_distribution<std::size_t>(30, 400)(rng);
    spec.test = 10;
    spec.dim = 16;
    spec.clustering = 0.3;
    spec.label_weights = {std::uniform_real_distribution<double>(0.05, 1.0)(rng),
                          std::uniform_real_distribution<double>(0.05, 1.0)(rng),
                          std::uniform_real_distribution<double>(0.05, 1.0)(rng)};
    spec.seed = rng();
    const auto ds = make_synthetic(spec);
    const auto support = sorted_support(ds);
    const auto labels = labels_of(ds);
    std::vector<std::size_t> counts(ds.scheme.size(), 0);
    for (const auto& s : support) ++counts[ds.scheme.index_of(s.label)];
    const SimilarityStrategy strategy(StrategyKind::IT);

    for (const auto& t : sorted_tests(ds)) {
      for (std::size_t k : {1, 2, 4, 7, 8, 16, 32}) {
        const auto tag = " (corpus " + std::to_string(corpus) + ", " + t.id + ", k=" + std::to_string(k) + ")";
        const auto cb = select(t, support, strategy, ProtocolKind::CategoryBalanced, k, ds.scheme, ds.store);
        check.require(cb.demos.size() == k, "balanced size" + tag);
        if (cb.warnings.empty()) {
          std::size_t lo = k, hi = 0;
          for (const auto& [cat, n] : cb.allocation) lo = std::min(lo, n), hi = std::max(hi, n);
          check.require(hi - lo <= 1, "balanced counts spread " + std::to_string(hi - lo) + tag);
        }

        const auto id = select(t, support, strategy, ProtocolKind::IdenticalToSupportSet, k, ds.scheme, ds.store);
        const auto expect = oracle_apportion(k, counts);
        for (std::size_t i = 0; i < ds.scheme.size(); ++i)
          check.require(id.allocation[i].second == expect[i], "identical-to-support apportionment" + tag);

        const auto ideal = select(t, support, strategy, ProtocolKind::Ideal, k, ds.scheme, ds.store);
        for (const auto& d : ideal.demos) check.require(labels.at(d.id) == t.label, "ideal label" + tag);
        const std::size_t same = counts[ds.scheme.index_of(t.label)];
        check.require(ideal.demos.size() == std::min(k, same), "ideal size" + tag);

        const auto contrary = select(t, support, strategy, ProtocolKind::ContraryToIdeal, k, ds.scheme, ds.store);
        for (const auto& d : contrary.demos) check.require(labels.at(d.id) != t.label, "contrary label" + tag);
        check.require(contrary.demos.size() == std::min(k, support.size() - same), "contrary size" + tag);
        selections += 4;
      }
    }
  }
  return check.done(std::to_string(selections) + " protocol selections satisfy their constraints");
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t m = i; m <= j; ++m) r[idx[m]] = (double(i) + double(j)) / 2.0 + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Outcome ceiling_floor() {
  Check check;
  const auto ds = make_synthetic({.support = 240, .test = 60, .dim = 16, .task = TaskType::PostLevel,
                                  .clustering = 0.3, .seed = 300});
  PipelineConfig cfg;
  cfg.backend = MockShortcutMajority{};
  cfg.shots = 8;
  cfg.protocol = ProtocolKind::Ideal;
  const double ceiling = run_pipeline(ds, cfg).report.accuracy;
  cfg.protocol = ProtocolKind::ContraryToIdeal;
  const double floor = run_pipeline(ds, cfg).report.accuracy;
  check.require(ceiling == 1.0, "ideal accuracy " + fmt("%g", ceiling));
  check.require(floor == 0.0, "contrary accuracy " + fmt("%g", floor));

  std::vector<double> slrs, accs;
  cfg.protocol = ProtocolKind::Unlimited;
  for (int level = 0; level < 10; ++level) {
    const auto fx = make_synthetic({.support = 400, .test = 200, .dim = 16, .task = TaskType::PostLevel,
                                    .clustering = 0.09 * level, .seed = 900 + std::uint64_t(level)});
    const auto r = run_pipeline(fx, cfg).report;
    slrs.push_back(*r.slr_overall);
    accs.push_back(r.accuracy);
  }
  const double rho = spearman(slrs, accs);
  check.require(rho >= 0.9, "Spearman " + fmt("%.4f", rho));
  return check.done("ideal 1.0, contrary 0.0, Spearman(SLR, accuracy) = " + fmt("%.4f", rho) + " over 10 fixtures");
}

Outcome golden_sequences() {
  Check check;
  const auto ds = load_golden5();
  const auto rendered = render_golden(ds);
  check.require(rendered == read_file(golden_sequences_path()), "rendering differs from tests/golden/sequences.jsonl");

  // One sequence spelled out by hand: t1, all four modalities, ascending IT demos s2, s3, s1.
  const auto lines = read_jsonl(golden_sequences_path());
  check.require(lines.size() == 32, "expected 32 golden lines");
  const auto full = sequence_from_json(lines.at(28));
  std::string wire;
  for (const auto& p : full.parts()) wire += (p.kind == Part::Kind::Image ? "<" + p.content + ">" : p.content);
  const std::string expected =
      "A post contains an image and a text. Classify the sentiment of the post into [Positive, Neutral, Negative]. "
      "Here are some examples\n\n"
      "<img/s2.jpg><gen/s2.png>Text: Flight cancelled again, stuck overnight\n"
      "Caption: A crowded airport departure board\nSentiment: Negative\n\n"
      "<img/s3.jpg><gen/s3.png>Text: Bus schedule for the weekend\n"
      "Caption: A printed timetable on a wall\nSentiment: Neutral\n\n"
      "<img/s1.jpg><gen/s1.png>Text: Sunny afternoon at the beach with friends\n"
      "Caption: A group of people smiling on a sandy beach\nSentiment: Positive\n\n"
      "<img/t1.jpg><gen/t1.png>Text: Best birthday cake ever\n"
      "Caption: A chocolate cake with lit candles\nSentiment:";
  check.require(full.meta.composition == "I,C,T,G" && full.meta.test_id == "t1", "line 29 is not t1 / I,C,T,G");
  check.require(wire == expected, "hand-written I,C,T,G sequence differs");

  const auto animals = LabelMap::animals(ds.scheme);
  for (std::size_t i = 30; i < 32; ++i) {
    const auto seq = sequence_from_json(lines.at(i));
    check.require(seq.meta.label_map == "animals", "label-map variant missing");
    check.require(seq.prompt.find("[dog, cat, bird]") != std::string::npos, "animal category list");
    for (const auto& b : seq.blocks) {
      const auto& last = b.lines.back();
      const auto token = last.substr(std::string("Sentiment: ").size());
      const auto back = parse_prediction(token, ds.scheme, animals);
      check.require(back.has_value() && animals.surface(*back) == token, "parse round trip of " + token);
    }
  }
  for (const auto& cat : ds.scheme.categories())
    check.require(parse_prediction(animals.surface(cat), ds.scheme, animals) == cat, "inverse map of " + cat);
  return check.done("15 compositions x 2 tests plus the animal label map are byte identical");
}

Outcome metric_identities() {
  Check check;
  std::mt19937_64 rng(55);
  for (int round = 0; round < 200; ++round) {
    const std::size_t c = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    std::vector<std::string> cats;
    for (std::size_t i = 0; i < c; ++i) cats.push_back("C" + std::to_string(i));
    const SentimentScheme scheme("rand", cats, TaskType::PostLevel);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    const std::size_t shots = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    std::uniform_int_distribution<std::size_t> pick(0, c - 1);
    std::uniform_int_distribution<std::size_t> pick_or_unparsed(0, c);

    LabelIndex labels;
    PredictionMap preds;
    std::vector<SelectionResult> sels;
    std::size_t demo_no = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = "t" + std::to_string(i);
      labels[id] = cats[pick(rng)];
      const auto p = pick_or_unparsed(rng);
      preds[id] = p == c ? std::nullopt : std::optional<std::string>(cats[p]);
      SelectionResult s;
      s.test_id = id;
      s.shots = shots;
      for (std::size_t d = 0; d < shots; ++d) {
        const auto did = "d" + std::to_string(demo_no++);
        labels[did] = cats[pick(rng)];
        s.demos.push_back({did, {}});
      }
      sels.push_back(std::move(s));
    }
    LabelIndex test_labels;
    for (const auto& [id, l] : labels)
      if (preds.contains(id)) test_labels[id] = l;

    auto r = evaluate(preds, test_labels, scheme);
    attach_slr(r, sels, labels, scheme);
    const auto& m = r.confusion.counts;
    check.require(r.accuracy == double(r.confusion.trace()) / double(r.confusion.total()), "trace/total != accuracy");
    check.require(r.confusion.total() == std::int64_t(n), "total");
    std::int64_t unparsed = 0;
    double weighted = 0;
    for (std::size_t i = 0; i < c; ++i) {
      const auto row = m.row(Eigen::Index(i)).sum();
      const auto col = m.col(Eigen::Index(i)).sum();
      check.require(row == r.per_class.at(cats[i]).support, "row sum != support");
      check.require(col == r.per_class.at(cats[i]).predicted, "column sum != predicted");
      unparsed += r.confusion.unparsed(i);
      if (row > 0) weighted += double(row) * *r.slr_per_category.at(cats[i]);
      else check.require(!r.slr_per_category.at(cats[i]).has_value(), "empty category SLR not null");
    }
    check.require(unparsed == r.unparsed, "unparsed column sum");
    check.require(m.sum() == std::int64_t(n), "matrix sum");
    check.require(std::abs(weighted / double(n) - *r.slr_overall) <= 1e-12, "SLR-Overall != weighted mean");
  }
  return check.done("200 randomized prediction sets satisfy all identities");
}

Outcome cosine_properties() {
  Check check;
  Eigen::RowVector2f x(1, 0), y(0, 1), d(1, 1);
  check.require(std::abs(cosine(x, x) - 1.0) <= 1e-6, "cos(x,x)");
  check.require(std::abs(cosine(x, y)) <= 1e-6, "cos(x,y)");
  check.require(std::abs(cosine(x, d) - 1.0 / std::sqrt(2.0)) <= 1e-6, "cos(x,d)");

  std::mt19937_64 rng(404);
  std::normal_distribution<float> g;
  std::uniform_real_distribution<float> scale(1e-3f, 1e3f);
  std::uniform_int_distribution<int> dims(1, 512);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n = dims(rng);
    Eigen::RowVectorXf a(n), b(n);
    for (int j = 0; j < n; ++j) a[j] = g(rng), b[j] = g(rng);
    const double ab = cosine(a, b);
    const Eigen::RowVectorXf sa = a * scale(rng);
    const Eigen::RowVectorXf sb = b * scale(rng);
    const double err = std::max({std::abs(ab - cosine(b, a)), std::abs(ab - cosine(sa, b)), std::abs(ab - cosine(a, sb)),
                                 std::abs(ab - oracle_cosine(a, b))});
    worst = std::max(worst, err);
    check.require(err <= 1e-6, "pair " + std::to_string(i) + " error " + fmt("%g", err));
  }
  return check.done("analytic values exact; worst symmetry/scale deviation " + fmt("%.2e", worst) +
                    " over 10^4 pairs");
}

Outcome performance() {
  Check check;
  const auto ds = make_synthetic({.support = 1562, .test = 1000, .dim = 512, .task = TaskType::PostLevel,
                                  .clustering = 0.2, .seed = 64});
  const auto support = sorted_support(ds);
  const auto tests = sorted_tests(ds);
  const SimilarityStrategy wit(StrategyKind::WIT, Ratio{2, 8});
  const auto start = std::chrono::steady_clock::now();
  const auto out = select_all(tests, support, wit, ProtocolKind::Unlimited, 16, ds.scheme, ds.store, 0, 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double per_ms = secs * 1000.0 / double(tests.size());
  check.require(out.size() == 1000, "selection count");
  check.require(secs < 5.0, "took " + fmt("%.3f", secs) + " s");
  check.require(per_ms < 64.2, "per sample " + fmt("%.3f", per_ms) + " ms");
  return check.done("1000 x 1562 at dim 512 in " + fmt("%.3f", secs) + " s, " + fmt("%.3f", per_ms) +
                    " ms per sample, single thread");
}

Outcome determinism() {
  Check check;
  const auto ds = make_synthetic({.support = 200, .test = 50, .dim = 32, .seed = 8, .with_assets = true});
  auto run_into = [&](const fs::path& dir, unsigned threads) {
    fs::remove_all(dir);
    PipelineConfig cfg;
    cfg.strategy = SimilarityStrategy(StrategyKind::WITA, Ratio{7, 3}, Ratio{2, 8});
    cfg.protocol = ProtocolKind::CategoryBalanced;
    cfg.composition = ModalityComposition::parse("I,C,T,G");
    cfg.shots = 6;
    cfg.seed = 99;
    cfg.threads = threads;
    cfg.parallel = threads;
    cfg.out_dir = dir;
    run_pipeline(ds, cfg);
    cfg.strategy = SimilarityStrategy(StrategyKind::Random);
    cfg.out_dir = dir / "random";
    run_pipeline(ds, cfg);
  };
  const auto root = fs::temp_directory_path() / "mmicl_acceptance_determinism";
  run_into(root / "a", 1);
  run_into(root / "b", 3);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    check.require(fs::exists(root / "b" / rel), "missing " + rel.string());
    if (fs::exists(root / "b" / rel))
      check.require(read_file(entry.path()) == read_file(root / "b" / rel), rel.string() + " differs");
    ++files;
  }
  check.require(files == 8, "expected 8 artifacts, found " + std::to_string(files));
  fs::remove_all(root);
  return check.done(std::to_string(files) + " artifacts byte identical across two runs");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"slr-worked-example", slr_worked_example}, {"oracle-equivalence", oracle_equivalence},
      {"rank-equivalence", rank_equivalence},     {"protocol-suite", protocol_suite},
      {"ceiling-floor", ceiling_floor},           {"golden-sequences", golden_sequences},
      {"metric-identities", metric_identities},   {"cosine", cosine_properties},
      {"performance", performance},               {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %-20s %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
