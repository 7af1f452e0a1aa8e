#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mmicl/error.hpp"
#include "mmicl/selection.hpp"
#include "support/oracle.hpp"
#include "support/synthetic.hpp"

using namespace mmicl;

namespace {

struct Planted {
  std::string id;
  std::string label;
  double cos;  // cosine to the test sample on the image channel
};

// Test vector (1,0); each candidate sits at angle acos(cos) so its image
// cosine is exactly what the fixture says up to float rounding.
struct Fixture {
  SentimentScheme scheme;
  std::vector<Sample> support;
  Sample test;
  EmbeddingStore store{TaskType::PostLevel};

  Fixture(SentimentScheme s, const std::vector<Planted>& planted, std::string test_label = "Positive")
      : scheme(std::move(s)) {
    test = Sample{"t", Split::Test, "x", "t.jpg", std::move(test_label), {}, {}, {}};
    RowMatrixXf m(static_cast<Eigen::Index>(planted.size() + 1), 2);
    std::vector<std::string> ids = {"t"};
    m.row(0) << 1.0f, 0.0f;
    for (std::size_t i = 0; i < planted.size(); ++i) {
      const auto& p = planted[i];
      support.push_back(Sample{p.id, Split::Support, "x", p.id + ".jpg", p.label, {}, {}, {}});
      m.row(static_cast<Eigen::Index>(i + 1)) << static_cast<float>(p.cos),
          static_cast<float>(std::sqrt(1.0 - p.cos * p.cos));
      ids.push_back(p.id);
    }
    store.add(Channel::Image, ChannelStore("image", ids, m));
    store.add(Channel::Text, ChannelStore("text", ids, m));
  }

  SelectionResult run(ProtocolKind protocol, std::size_t k, StrategyKind kind = StrategyKind::I) const {
    return select(test, support, SimilarityStrategy(kind), protocol, k, scheme, store, 1);
  }
};

std::vector<std::string> demo_ids(const SelectionResult& r) {
  std::vector<std::string> ids;
  for (const auto& d : r.demos) ids.push_back(d.id);
  return ids;
}

std::size_t count_of(const SelectionResult& r, const std::string& cat) {
  for (const auto& [c, n] : r.allocation)
    if (c == cat) return n;
  return 0;
}

const SentimentScheme kThree = three_class_scheme(TaskType::PostLevel);

}  // namespace

TEST_CASE("rank ties break by ascending id") {
  Fixture f(kThree, {{"b", "Positive", 0.9}, {"c", "Neutral", 0.5}, {"a", "Negative", 0.5}});
  const auto ranked = rank_candidates(f.test, f.support, SimilarityStrategy(StrategyKind::I), f.store);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].id == "b");
  CHECK(ranked[1].id == "a");
  CHECK(ranked[2].id == "c");
  CHECK(ranked[0].score.value == doctest::Approx(0.9));
  CHECK(ranked[1].score.value == ranked[2].score.value);
}

TEST_CASE("rank single candidate and self exclusion") {
  Fixture f(kThree, {{"b", "Positive", 0.3}});
  CHECK(rank_candidates(f.test, f.support, SimilarityStrategy(StrategyKind::I), f.store).size() == 1);
  auto with_self = f.support;
  with_self.push_back(Sample{"t", Split::Support, "x", "t.jpg", "Positive", {}, {}, {}});
  const auto ranked = rank_candidates(f.test, with_self, SimilarityStrategy(StrategyKind::I), f.store);
  REQUIRE(ranked.size() == 1);
  CHECK(ranked[0].id == "b");
  CHECK_THROWS_AS(rank_candidates(f.test, f.support, SimilarityStrategy(StrategyKind::Random), f.store), Error);
}

TEST_CASE("rank matches a brute-force oracle on 1000 candidates") {
  const auto ds = testing::make_synthetic({.support = 1000, .test = 3, .dim = 24, .seed = 77});
  const auto support = testing::sorted_support(ds);
  for (const auto& t : testing::sorted_tests(ds)) {
    const auto ranked = rank_candidates(t, support, SimilarityStrategy(StrategyKind::ITA), ds.store);
    const auto oracle = testing::oracle_rank(ds, t, support, testing::oracle_weights(StrategyKind::ITA));
    REQUIRE(ranked.size() == oracle.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(ranked[i].id == oracle[i].id);
  }
}

TEST_CASE("allocate_counts examples") {
  const std::map<std::string, std::size_t> counts = {{"Positive", 50}, {"Neutral", 30}, {"Negative", 20}};
  const std::optional<std::string> none;

  auto a = allocate_counts(ProtocolKind::CategoryBalanced, 6, kThree, counts, none);
  CHECK(a.at("Positive") == 2);
  CHECK(a.at("Neutral") == 2);
  CHECK(a.at("Negative") == 2);

  a = allocate_counts(ProtocolKind::IdenticalToSupportSet, 10, kThree, counts, none);
  CHECK(a.at("Positive") == 5);
  CHECK(a.at("Neutral") == 3);
  CHECK(a.at("Negative") == 2);

  a = allocate_counts(ProtocolKind::Ideal, 4, kThree, counts, std::string("Positive"));
  CHECK(a.at("Positive") == 4);
  CHECK(a.at("Neutral") == 0);
  CHECK(a.at("Negative") == 0);

  a = allocate_counts(ProtocolKind::ContraryToIdeal, 5, kThree, counts, std::string("Positive"));
  CHECK(a.at("Positive") == 0);
  CHECK(a.at("Neutral") == 3);
  CHECK(a.at("Negative") == 2);

  CHECK(allocate_counts(ProtocolKind::Unlimited, 4, kThree, counts, none).empty());
  CHECK_THROWS_AS(allocate_counts(ProtocolKind::Ideal, 4, kThree, counts, none), Error);
}

TEST_CASE("allocate_counts remainder goes to the strongest next candidate") {
  const std::map<std::string, std::size_t> counts = {{"Positive", 6}, {"Neutral", 6}, {"Negative", 6}};
  auto a = allocate_counts(ProtocolKind::CategoryBalanced, 16, kThree, counts, {}, {0.1, 0.3, 0.2});
  CHECK(a.at("Positive") == 5);
  CHECK(a.at("Neutral") == 6);
  CHECK(a.at("Negative") == 5);
  // equal scores fall back to scheme order; an exhausted category ranks last
  a = allocate_counts(ProtocolKind::CategoryBalanced, 17, kThree, counts, {}, {std::nullopt, 0.2, 0.2});
  CHECK(a.at("Positive") == 5);
  CHECK(a.at("Neutral") == 6);
  CHECK(a.at("Negative") == 6);
}

TEST_CASE("category balanced k=16 on a hand-enumerated fixture") {
  // Sixth-best per category: Positive 0.10, Neutral 0.35, Negative 0.20, so
  // the single remainder slot goes to Neutral.
  std::vector<Planted> p;
  const double pos[] = {0.95, 0.9, 0.85, 0.8, 0.75, 0.10};
  const double neu[] = {0.7, 0.65, 0.6, 0.55, 0.5, 0.35, 0.05};
  const double neg[] = {0.45, 0.44, 0.43, 0.42, 0.41, 0.20};
  for (int i = 0; i < 6; ++i) p.push_back({"p" + std::to_string(i), "Positive", pos[i]});
  for (int i = 0; i < 7; ++i) p.push_back({"u" + std::to_string(i), "Neutral", neu[i]});
  for (int i = 0; i < 6; ++i) p.push_back({"n" + std::to_string(i), "Negative", neg[i]});
  Fixture f(kThree, p);
  const auto r = f.run(ProtocolKind::CategoryBalanced, 16);
  CHECK(count_of(r, "Positive") == 5);
  CHECK(count_of(r, "Neutral") == 6);
  CHECK(count_of(r, "Negative") == 5);
  CHECK(r.warnings.empty());
  const auto ids = demo_ids(r);
  CHECK(std::find(ids.begin(), ids.end(), "u5") != ids.end());
  CHECK(std::find(ids.begin(), ids.end(), "p5") == ids.end());
  CHECK(ids.front() == "u5");
  CHECK(ids.back() == "p0");
}

TEST_CASE("select zero-shot") {
  Fixture f(kThree, {{"b", "Positive", 0.9}});
  const auto r = f.run(ProtocolKind::Unlimited, 0);
  CHECK(r.demos.empty());
  CHECK(r.allocation.empty());
}

TEST_CASE("select unlimited returns ascending top-k") {
  Fixture f(kThree, {{"b", "Positive", 0.9}, {"a", "Neutral", 0.5}, {"c", "Negative", 0.4}});
  const auto r = f.run(ProtocolKind::Unlimited, 2);
  CHECK(demo_ids(r) == std::vector<std::string>{"a", "b"});
  CHECK(r.demos[0].score.value == doctest::Approx(0.5));
  CHECK(r.demos[1].score.value == doctest::Approx(0.9));
  CHECK(count_of(r, "Positive") == 1);
  CHECK(count_of(r, "Neutral") == 1);
  CHECK(count_of(r, "Negative") == 0);
}

TEST_CASE("category balanced shortfall backfills from the global ranking") {
  const SentimentScheme two("two", {"Positive", "Negative"}, TaskType::PostLevel);
  Fixture f(two, {{"p0", "Positive", 0.1},
                  {"n0", "Negative", 0.9},
                  {"n1", "Negative", 0.8},
                  {"n2", "Negative", 0.7},
                  {"n3", "Negative", 0.6},
                  {"n4", "Negative", 0.5}});
  const auto r = f.run(ProtocolKind::CategoryBalanced, 4);
  CHECK(demo_ids(r) == std::vector<std::string>{"p0", "n2", "n1", "n0"});
  CHECK(count_of(r, "Positive") == 1);
  CHECK(count_of(r, "Negative") == 3);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings.front().rfind("Shortfall", 0) == 0);
}

TEST_CASE("oracle protocols respect the test label") {
  const auto ds = testing::make_synthetic({.support = 60, .test = 10, .dim = 8, .seed = 3});
  const auto support = testing::sorted_support(ds);
  for (const auto& t : testing::sorted_tests(ds)) {
    const auto ideal = select(t, support, SimilarityStrategy(StrategyKind::IT), ProtocolKind::Ideal, 8,
                              ds.scheme, ds.store);
    const auto contrary = select(t, support, SimilarityStrategy(StrategyKind::IT),
                                 ProtocolKind::ContraryToIdeal, 8, ds.scheme, ds.store);
    CHECK(ideal.oracle());
    CHECK(ideal.demos.size() == 8);
    CHECK(contrary.demos.size() == 8);
    for (const auto& d : ideal.demos) CHECK(ds.samples[std::stoul(d.id.substr(1))].label == t.label);
    for (const auto& d : contrary.demos) CHECK(ds.samples[std::stoul(d.id.substr(1))].label != t.label);
  }
  auto unlabeled = ds.samples.back();
  unlabeled.label.clear();
  CHECK_THROWS_AS(select(unlabeled, support, SimilarityStrategy(StrategyKind::IT), ProtocolKind::Ideal, 2,
                         ds.scheme, ds.store),
                  Error);
}

TEST_CASE("largest remainder") {
  const std::vector<std::size_t> w = {50, 30, 20};
  CHECK(largest_remainder(10, w) == std::vector<std::size_t>{5, 3, 2});
  const std::vector<std::size_t> eq = {1, 1, 1};
  CHECK(largest_remainder(4, eq) == std::vector<std::size_t>{2, 1, 1});
  for (std::size_t k = 0; k < 40; ++k) {
    const std::vector<std::size_t> v = {7, 13, 3, 0, 11};
    CHECK(largest_remainder(k, v) == testing::oracle_apportion(k, v));
  }
}

TEST_CASE("random strategy is seeded per sample and independent of threads") {
  const auto ds = testing::make_synthetic({.support = 80, .test = 12, .dim = 8, .seed = 5});
  const auto support = testing::sorted_support(ds);
  const auto tests = testing::sorted_tests(ds);
  const SimilarityStrategy random(StrategyKind::Random);
  const auto a = select_all(tests, support, random, ProtocolKind::Unlimited, 4, ds.scheme, ds.store, 9, 1);
  const auto b = select_all(tests, support, random, ProtocolKind::Unlimited, 4, ds.scheme, ds.store, 9, 4);
  const auto c = select_all(tests, support, random, ProtocolKind::Unlimited, 4, ds.scheme, ds.store, 10, 1);
  bool differs = false;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    CHECK(demo_ids(a[i]) == demo_ids(b[i]));
    differs = differs || demo_ids(a[i]) != demo_ids(c[i]);
    for (std::size_t j = 1; j < a[i].demos.size(); ++j)
      CHECK(a[i].demos[j - 1].score.value <= a[i].demos[j].score.value);
  }
  CHECK(differs);
  CHECK(derive_seed(1, "x") == derive_seed(1, "x"));
  CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
}
