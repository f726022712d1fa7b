#include "valsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "valsim/error.hpp"

namespace valsim {
namespace {

std::size_t index_of(const ValueRef& v) {
  return std::visit([](auto x) { return static_cast<std::size_t>(x); }, v);
}

}  // namespace

std::string_view to_string(Metric m) { return m == Metric::trust ? "trust" : "ios"; }

Metric parse_metric(std::string_view s) {
  if (s == "trust") return Metric::trust;
  if (s == "ios" || s == "IOS") return Metric::ios;
  throw ValidationError("unknown metric '" + std::string(s) + "' (expected trust|ios)");
}

std::optional<double> metric_value(const EvaluationRecord& r, Metric m) {
  if (!r.valid) return std::nullopt;
  if (m == Metric::trust) return r.trust_mean;
  if (r.ios) return static_cast<double>(*r.ios);
  return std::nullopt;
}

// ---- matrix ----------------------------------------------------------------

EvalMatrix::EvalMatrix(ValueKind mode, Metric metric, Task task, std::string language)
    : mode_(mode),
      metric_(metric),
      task_(task),
      language_(std::move(language)),
      n_(all_values(mode).size()),
      cells_(n_ * n_),
      counts_(n_ * n_, 0) {}

const std::optional<double>& EvalMatrix::cell(const ValueRef& evaluator, const ValueRef& target) const {
  if (kind_of(evaluator) != mode_ || kind_of(target) != mode_)
    throw ValidationError("value kind does not match matrix mode");
  return cell(index_of(evaluator), index_of(target));
}

void EvalMatrix::set(std::size_t row, std::size_t col, double mean, std::size_t count) {
  cells_[row * n_ + col] = mean;
  counts_[row * n_ + col] = count;
}

bool EvalMatrix::complete() const {
  return std::all_of(cells_.begin(), cells_.end(), [](const auto& c) { return c.has_value(); });
}

std::vector<std::string> EvalMatrix::missing_cells() const {
  std::vector<std::string> out;
  const auto values = all_values(mode_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (!cell(i, j)) out.push_back(std::string(to_string(values[i])) + "->" + std::string(to_string(values[j])));
  return out;
}

std::vector<double> EvalMatrix::flatten() const {
  std::vector<double> out;
  out.reserve(cells_.size());
  for (const auto& c : cells_) {
    if (!c) throw ValidationError("cannot flatten an incomplete matrix");
    out.push_back(*c);
  }
  return out;
}

EvalMatrix build_matrix(std::span<const EvaluationRecord> records, ValueKind mode, Metric metric, Task task,
                        const std::string& language) {
  EvalMatrix m(mode, metric, task, language);
  const std::size_t n = m.size();
  std::vector<double> sums(n * n, 0.0);
  std::vector<std::size_t> counts(n * n, 0);
  std::size_t used = 0;
  for (const auto& r : records) {
    if (r.task != task || r.language != language) continue;
    if (kind_of(r.evaluator_value) != mode || kind_of(r.target_value) != mode) continue;
    const auto v = metric_value(r, metric);
    if (!v) continue;
    const std::size_t k = index_of(r.evaluator_value) * n + index_of(r.target_value);
    sums[k] += *v;
    ++counts[k];
    ++used;
  }
  if (used == 0)
    throw ValidationError("no valid records for " + std::string(to_string(mode)) + " " +
                          std::string(to_string(metric)) + " matrix (" + std::string(to_string(task)) + ", " +
                          language + ")");
  for (std::size_t k = 0; k < n * n; ++k)
    if (counts[k] > 0) m.set(k / n, k % n, sums[k] / static_cast<double>(counts[k]), counts[k]);
  return m;
}

SimilaritySummary similarity_means(const EvalMatrix& matrix, const CircumplexConfig& config,
                                   LevelWeighting weighting) {
  SimilaritySummary out;
  std::array<double, 4> sums{};
  std::array<double, 4> weights{};
  const auto values = all_values(matrix.mode());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (std::size_t j = 0; j < matrix.size(); ++j) {
      const auto level = static_cast<std::size_t>(classify_similarity(values[i], values[j], config));
      ++out.populations[level];
      const auto& c = matrix.cell(i, j);
      if (!c) continue;
      const double w = weighting == LevelWeighting::cells ? 1.0 : static_cast<double>(matrix.count(i, j));
      sums[level] += w * *c;
      weights[level] += w;
    }
  }
  for (std::size_t l = 0; l < 4; ++l)
    if (weights[l] > 0) out.means[l] = sums[l] / weights[l];
  return out;
}

ConditionStats condition_stats(std::span<const double> values) {
  if (values.size() < 2)
    throw UndefinedResultError("standard deviation needs at least two values, got " + std::to_string(values.size()));
  ConditionStats s;
  s.n = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

ConditionStats condition_stats(std::span<const EvaluationRecord> records, Metric metric) {
  std::vector<double> values;
  for (const auto& r : records)
    if (auto v = metric_value(r, metric)) values.push_back(*v);
  return condition_stats(values);
}

EvalMatrix aggregate_basic_to_higher(const EvalMatrix& basic, const CircumplexConfig& config) {
  if (basic.mode() != ValueKind::basic) throw ValidationError("aggregation needs a basic-value matrix");
  if (!basic.complete()) {
    std::string list;
    for (const auto& c : basic.missing_cells()) list += (list.empty() ? "" : ", ") + c;
    throw ValidationError("source matrix is incomplete; missing cells: " + list);
  }
  EvalMatrix out(ValueKind::higher_order, basic.metric(), basic.task(), basic.language());
  for (Dimension h1 : kDimensions) {
    for (Dimension h2 : kDimensions) {
      double sum = 0.0;
      std::size_t cells = 0;
      std::size_t records = 0;
      for (BasicValue e : config.members(h1)) {
        for (BasicValue t : config.members(h2)) {
          sum += *basic.cell(static_cast<std::size_t>(e), static_cast<std::size_t>(t));
          records += basic.count(static_cast<std::size_t>(e), static_cast<std::size_t>(t));
          ++cells;
        }
      }
      out.set(static_cast<std::size_t>(h1), static_cast<std::size_t>(h2), sum / static_cast<double>(cells), records);
    }
  }
  return out;
}

// ---- correlation -----------------------------------------------------------

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
                          ")");
  if (x.size() < 3) throw ValidationError("pearson: need at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedResultError("pearson: correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_p(double r, std::size_t n) {
  if (n < 3) throw ValidationError("pearson_p: need n >= 3, got " + std::to_string(n));
  if (!(std::abs(r) <= 1.0)) throw ValidationError("pearson_p: |r| must not exceed 1");
  if (std::abs(r) == 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t2 = r * r * df / (1.0 - r * r);
  // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
  return boost::math::ibeta(df / 2.0, 0.5, df / (df + t2));
}

std::string significance_stars(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

CorrelationResult correlate_basic_higher(const EvalMatrix& basic, const EvalMatrix& higher,
                                         const CircumplexConfig& config) {
  if (higher.mode() != ValueKind::higher_order) throw ValidationError("second matrix must be higher-order");
  if (basic.metric() != higher.metric()) throw ValidationError("matrices measure different metrics");
  const auto aggregated = aggregate_basic_to_higher(basic, config).flatten();
  const auto direct = higher.flatten();
  CorrelationResult out;
  out.n = direct.size();
  out.r = pearson(aggregated, direct);
  out.p = pearson_p(out.r, out.n);
  return out;
}

}  // namespace valsim
