#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmicl/corpus.hpp"
#include "mmicl/selection.hpp"

namespace mmicl {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Rows are true categories, columns predicted categories plus a trailing
/// Unparsed column.
struct ConfusionMatrix {
  std::vector<std::string> categories;
  CountMatrix counts;

  std::int64_t total() const { return counts.sum(); }
  std::int64_t trace() const;
  std::int64_t unparsed(std::size_t row) const { return counts(static_cast<Eigen::Index>(row), counts.cols() - 1); }
};

struct ClassMetrics {
  std::optional<double> precision;  // nullopt when never predicted
  std::optional<double> recall;     // nullopt when no test label of the class
  std::int64_t predicted = 0;
  std::int64_t support = 0;
};

struct EvaluationReport {
  double accuracy = 0.0;
  std::int64_t total = 0;
  std::int64_t unparsed = 0;
  std::map<std::string, ClassMetrics> per_class;
  ConfusionMatrix confusion;
  std::optional<double> slr_overall;
  std::map<std::string, std::optional<double>> slr_per_category;
  bool oracle = false;
  std::map<std::string, std::string> config;
};

using PredictionMap = std::map<std::string, std::optional<std::string>>;
using LabelIndex = std::map<std::string, std::string>;

EvaluationReport evaluate(const PredictionMap& predictions, const LabelIndex& labels,
                          const SentimentScheme& scheme);

/// Same-label rate over the selections whose test label equals `category`
/// (all selections when nullopt).
double slr(const std::vector<SelectionResult>& selections, const LabelIndex& labels,
           const std::optional<std::string>& category = std::nullopt);

/// Fills slr_overall / slr_per_category; categories without test samples
/// are reported as null.
void attach_slr(EvaluationReport& report, const std::vector<SelectionResult>& selections,
                const LabelIndex& labels, const SentimentScheme& scheme);

/// Ratio rounded to six fractional digits for reports.
double report_ratio(double r);

}  // namespace mmicl
