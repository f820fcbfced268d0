#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "claps/conformal.hpp"

namespace claps::eval {

using conformal::Interval;
using conformal::Method;

struct CoverageCount {
  std::size_t covered = 0;
  std::size_t n = 0;
  double fraction() const noexcept {
    return n == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(n);
  }
};

/// Closed-interval membership; infinite bounds always cover.
CoverageCount coverage_count(std::span<const Interval> intervals, std::span<const double> y);
double coverage(std::span<const Interval> intervals, std::span<const double> y);

/// +∞ as soon as one interval is unbounded.
double mean_width(std::span<const Interval> intervals);

double mae(std::span<const double> mu, std::span<const double> y);

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion.
Bounds wilson_interval(std::size_t successes, std::size_t n, double conf = 0.95);

/// mean ± t_{conf, k−1}·sd/√k over k ≥ 2 values (sample sd).
Bounds t_interval(std::span<const double> values, double conf = 0.95);

double mean(std::span<const double> values);
/// Sample standard deviation (k − 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

struct MetricsRow {
  Method method = Method::claps;
  double coverage = 0.0;
  std::size_t covered = 0;
  double width_mean = 0.0;
  bool width_infinite = false;
  double mae = 0.0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  double threshold = 0.0;
  std::size_t rank_k = 0;
  std::size_t m_cal = 0;
  std::size_t cqr_clamped = 0;
};

struct AggregateRow {
  Method method = Method::claps;
  double coverage_mean = 0.0, coverage_sd = 0.0;
  double width_mean = 0.0, width_sd = 0.0;
  double mae_mean = 0.0, mae_sd = 0.0;
  Bounds coverage_wilson;  // pooled covered counts across seeds
  Bounds width_t;
  Bounds mae_t;
  bool width_infinite = false;
  std::vector<std::uint64_t> seeds;
};

/// Rows for one method. Confidence intervals need at least two seeds; with
/// one seed the t-intervals collapse onto the mean.
AggregateRow aggregate(std::span<const MetricsRow> rows, double conf = 0.95);

}  // namespace claps::eval
