#include "mmicl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmicl/error.hpp"

namespace mmicl {

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) t += counts(i, i);
  return t;
}

double report_ratio(double r) { return std::round(r * 1e6) / 1e6; }

EvaluationReport evaluate(const PredictionMap& predictions, const LabelIndex& labels, const SentimentScheme& scheme) {
  if (predictions.empty()) throw Error(ErrorCode::EmptyCollection, "no predictions to evaluate");
  for (const auto& [id, _] : predictions) {
    if (!labels.contains(id)) throw Error(ErrorCode::KeySetMismatch, "prediction for unlabelled sample '" + id + "'");
  }
  for (const auto& [id, _] : labels) {
    if (!predictions.contains(id)) throw Error(ErrorCode::KeySetMismatch, "no prediction for '" + id + "'");
  }

  const auto c = static_cast<Eigen::Index>(scheme.size());
  EvaluationReport report;
  report.confusion.categories = scheme.categories();
  report.confusion.counts = CountMatrix::Zero(c, c + 1);
  for (const auto& [id, pred] : predictions) {
    const auto row = static_cast<Eigen::Index>(scheme.index_of(labels.at(id)));
    const auto col = pred ? static_cast<Eigen::Index>(scheme.index_of(*pred)) : c;
    ++report.confusion.counts(row, col);
  }

  const auto& m = report.confusion.counts;
  report.total = m.sum();
  report.unparsed = m.col(c).sum();
  report.accuracy = static_cast<double>(report.confusion.trace()) / static_cast<double>(report.total);
  for (Eigen::Index i = 0; i < c; ++i) {
    ClassMetrics cm;
    cm.predicted = m.col(i).sum();
    cm.support = m.row(i).sum();
    if (cm.predicted > 0) cm.precision = static_cast<double>(m(i, i)) / static_cast<double>(cm.predicted);
    if (cm.support > 0) cm.recall = static_cast<double>(m(i, i)) / static_cast<double>(cm.support);
    report.per_class[scheme.categories()[static_cast<std::size_t>(i)]] = cm;
  }
  return report;
}

double slr(const std::vector<SelectionResult>& selections, const LabelIndex& labels,
           const std::optional<std::string>& category) {
  auto label_of = [&](const std::string& id) -> const std::string& {
    auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorCode::KeySetMismatch, "no label for '" + id + "'");
    return it->second;
  };
  // Exact rational sum over a common denominator; plain floating point only
  // when that denominator gets too large.
  std::uint64_t denom = 1;
  std::uint64_t numer = 0;
  bool exact = true;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : selections) {
    const auto& truth = label_of(s.test_id);
    if (category && truth != *category) continue;
    if (s.shots == 0) throw Error(ErrorCode::ZeroShot, "same-label rate of zero-shot selection '" + s.test_id + "'");
    std::size_t same = 0;
    for (const auto& d : s.demos) same += label_of(d.id) == truth ? 1 : 0;
    sum += static_cast<double>(same) / static_cast<double>(s.shots);
    ++n;
    if (exact) {
      const std::uint64_t l = std::lcm(denom, static_cast<std::uint64_t>(s.shots));
      if (l > (std::uint64_t{1} << 40)) {
        exact = false;
      } else {
        numer = numer * (l / denom) + same * (l / s.shots);
        denom = l;
      }
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyCollection, "no test samples" + (category ? " labelled " + *category : ""));
  if (exact && numer < (std::uint64_t{1} << 53) && denom * n < (std::uint64_t{1} << 53)) {
    return static_cast<double>(numer) / static_cast<double>(denom * n);
  }
  return sum / static_cast<double>(n);
}

void attach_slr(EvaluationReport& report, const std::vector<SelectionResult>& selections, const LabelIndex& labels,
                const SentimentScheme& scheme) {
  report.slr_overall.reset();
  report.slr_per_category.clear();
  const bool zero_shot =
      selections.empty() || std::any_of(selections.begin(), selections.end(), [](const auto& s) { return s.shots == 0; });
  for (const auto& cat : scheme.categories()) report.slr_per_category[cat] = std::nullopt;
  if (zero_shot) return;
  report.slr_overall = slr(selections, labels);
  for (const auto& cat : scheme.categories()) {
    const bool any = std::any_of(selections.begin(), selections.end(),
                                 [&](const auto& s) { return labels.at(s.test_id) == cat; });
    if (any) report.slr_per_category[cat] = slr(selections, labels, cat);
  }
}

}  // namespace mmicl
