#pragma once

// Evaluation matrices, similarity-level summaries, descriptive statistics,
// basic-to-higher-order aggregation, and Pearson correlation with its
// two-sided p-value.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "valsim/dialogue.hpp"
#include "valsim/values.hpp"

namespace valsim {

enum class Metric : std::uint8_t { trust, ios };

inline constexpr std::array<Metric, 2> kMetrics{Metric::trust, Metric::ios};

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

// Score of a record under a metric; nullopt for invalid records.
std::optional<double> metric_value(const EvaluationRecord& r, Metric m);

// Square matrix of directed mean scores. Rows are evaluators and columns
// targets, both in canonical value order.
class EvalMatrix {
 public:
  EvalMatrix(ValueKind mode, Metric metric, Task task, std::string language);

  ValueKind mode() const { return mode_; }
  Metric metric() const { return metric_; }
  Task task() const { return task_; }
  const std::string& language() const { return language_; }
  std::size_t size() const { return n_; }
  std::size_t cell_count() const { return n_ * n_; }

  const std::optional<double>& cell(std::size_t row, std::size_t col) const { return cells_[row * n_ + col]; }
  const std::optional<double>& cell(const ValueRef& evaluator, const ValueRef& target) const;
  std::size_t count(std::size_t row, std::size_t col) const { return counts_[row * n_ + col]; }

  void set(std::size_t row, std::size_t col, double mean, std::size_t count);

  bool complete() const;
  // (evaluator, target) ids of empty cells.
  std::vector<std::string> missing_cells() const;
  // Row-major cell means; throws ValidationError if incomplete.
  std::vector<double> flatten() const;

 private:
  ValueKind mode_;
  Metric metric_;
  Task task_;
  std::string language_;
  std::size_t n_;
  std::vector<std::optional<double>> cells_;
  std::vector<std::size_t> counts_;
};

// Cell (e, t) is the mean over valid records with that evaluator and target
// for the task and language. Throws ValidationError if no valid record
// matches.
EvalMatrix build_matrix(std::span<const EvaluationRecord> records, ValueKind mode, Metric metric, Task task,
                        const std::string& language);

enum class LevelWeighting : std::uint8_t {
  // Unweighted mean of cell means.
  cells,
  // Cell means weighted by their record counts.
  records,
};

struct SimilaritySummary {
  // Indexed by SimilarityLevel. Empty when the level has no cells.
  std::array<std::optional<double>, 4> means{};
  std::array<std::size_t, 4> populations{};

  const std::optional<double>& mean(SimilarityLevel l) const { return means[static_cast<std::size_t>(l)]; }
};

SimilaritySummary similarity_means(const EvalMatrix& matrix, const CircumplexConfig& config = {},
                                   LevelWeighting weighting = LevelWeighting::cells);

struct ConditionStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, divisor n - 1
  std::size_t n = 0;
};

// Over individual valid records. Throws UndefinedResultError with fewer
// than two.
ConditionStats condition_stats(std::span<const EvaluationRecord> records, Metric metric);
ConditionStats condition_stats(std::span<const double> values);

// Cell (H1, H2) is the unweighted mean of source cells (e, t) with e in H1
// and t in H2. Throws ValidationError listing missing source cells.
EvalMatrix aggregate_basic_to_higher(const EvalMatrix& basic, const CircumplexConfig& config = {});

// Product-moment correlation. Throws ValidationError for unequal lengths or
// fewer than three points, UndefinedResultError for a constant vector.
double pearson(std::span<const double> x, std::span<const double> y);

// Two-sided p from t = r sqrt(n-2) / sqrt(1-r^2) on n-2 degrees of freedom.
// |r| = 1 gives 0. Throws ValidationError for n < 3 or |r| > 1.
double pearson_p(double r, std::size_t n);

// "**" for p < .01, "*" for p < .05, otherwise empty.
std::string significance_stars(double p);

struct CorrelationResult {
  double r = 0.0;
  std::size_t n = 0;
  double p = 1.0;
};

// Correlates the aggregated basic matrix with the direct higher-order one,
// both flattened row-major.
CorrelationResult correlate_basic_higher(const EvalMatrix& basic, const EvalMatrix& higher,
                                         const CircumplexConfig& config = {});

}  // namespace valsim
