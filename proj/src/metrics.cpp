#include "claps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "claps/distributions.hpp"
#include "claps/error.hpp"

namespace claps::eval {

namespace {
void same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " vs " + std::to_string(b));
  }
}
}  // namespace

CoverageCount coverage_count(std::span<const Interval> intervals, std::span<const double> y) {
  same_length(intervals.size(), y.size());
  CoverageCount c{0, y.size()};
  for (std::size_t i = 0; i < y.size(); ++i)
    if (intervals[i].contains(y[i])) ++c.covered;
  return c;
}

double coverage(std::span<const Interval> intervals, std::span<const double> y) {
  return coverage_count(intervals, y).fraction();
}

double mean_width(std::span<const Interval> intervals) {
  if (intervals.empty()) throw Error(ErrorCode::EmptyInput, "no intervals");
  double s = 0.0;
  for (const auto& iv : intervals) {
    const double w = iv.width();
    if (std::isinf(w)) return std::numeric_limits<double>::infinity();
    s += w;
  }
  return s / static_cast<double>(intervals.size());
}

double mae(std::span<const double> mu, std::span<const double> y) {
  same_length(mu.size(), y.size());
  if (y.empty()) throw Error(ErrorCode::EmptyInput, "no points");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - mu[i]);
  return s / static_cast<double>(y.size());
}

Bounds wilson_interval(std::size_t successes, std::size_t n, double conf) {
  if (n == 0 || successes > n) {
    throw Error(ErrorCode::InvalidCounts,
                std::to_string(successes) + " successes of " + std::to_string(n));
  }
  const double z = dist::normal_two_sided_critical(conf);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  Bounds b{center - half, center + half};
  // p̂ ∈ {0, 1} puts one bound exactly on the boundary.
  if (successes == n) b.hi = 1.0;
  if (successes == 0) b.lo = 0.0;
  b.lo = std::clamp(b.lo, 0.0, 1.0);
  b.hi = std::clamp(b.hi, 0.0, 1.0);
  return b;
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Bounds t_interval(std::span<const double> values, double conf) {
  if (values.size() < 2) throw Error(ErrorCode::TooFewSeeds, "t-interval needs >= 2 values");
  const double m = mean(values);
  const double sd = sample_sd(values);
  const auto k = static_cast<double>(values.size());
  const double half = dist::student_t_two_sided_critical(conf, k - 1.0) * sd / std::sqrt(k);
  return {m - half, m + half};
}

AggregateRow aggregate(std::span<const MetricsRow> rows, double conf) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no rows to aggregate");
  AggregateRow a;
  a.method = rows.front().method;
  std::vector<double> cov, wid, err;
  std::size_t covered = 0, total = 0;
  for (const auto& r : rows) {
    cov.push_back(r.coverage);
    wid.push_back(r.width_mean);
    err.push_back(r.mae);
    covered += r.covered;
    total += r.n_test;
    a.width_infinite = a.width_infinite || r.width_infinite;
    a.seeds.push_back(r.seed);
  }
  a.coverage_mean = mean(cov);
  a.coverage_sd = sample_sd(cov);
  a.width_mean = mean(wid);
  a.width_sd = a.width_infinite ? std::numeric_limits<double>::quiet_NaN() : sample_sd(wid);
  a.mae_mean = mean(err);
  a.mae_sd = sample_sd(err);
  a.coverage_wilson = wilson_interval(covered, total, conf);
  if (rows.size() >= 2) {
    a.width_t = a.width_infinite ? Bounds{a.width_mean, a.width_mean} : t_interval(wid, conf);
    a.mae_t = t_interval(err, conf);
  } else {
    a.width_t = {a.width_mean, a.width_mean};
    a.mae_t = {a.mae_mean, a.mae_mean};
  }
  return a;
}

}  // namespace claps::eval
