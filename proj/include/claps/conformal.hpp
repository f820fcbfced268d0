#pragma once

// Conformity scores, split-conformal rank thresholds and interval
// construction for CLAPS and the three residual-style baselines.

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "claps/llla.hpp"

namespace claps::conformal {

using llla::PredictiveGaussian;

enum class Method { claps, baseline_cp, norm_cp, cqr };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct CalibrationResult {
  Method method = Method::claps;
  /// Lower-tail t ∈ [0, 0.5] for claps; upper-tail q ≥ 0 (possibly +∞) otherwise.
  double threshold = 0.0;
  std::size_t m = 0;
  double target_cov = 0.9;
  std::size_t rank_k = 0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double y) const noexcept { return lo <= y && y <= hi; }
};

/// min{Φ(z), 1 − Φ(z)} with z = (y − μ)/√v.
double centrality_score(const PredictiveGaussian& pred, double y);
double abs_residual_score(double mu, double y);
double normalized_score(double mu, double h, double y);
double cqr_score(double q_lo, double q_hi, double y);

struct RankThreshold {
  double value = 0.0;
  std::size_t k = 0;
};

/// k = ⌈(m+1)(1 − cov)⌉ on ascending scores; t = s_(k), or 0 when k > m.
RankThreshold rank_threshold_lower(std::span<const double> scores, double target_cov);
/// k = ⌈(m+1)·cov⌉ on ascending scores; q = s_(k), or +∞ when k > m.
RankThreshold rank_threshold_upper(std::span<const double> scores, double target_cov);

/// Lower-tail rank for claps, upper-tail for everything else.
CalibrationResult calibrate(Method method, std::span<const double> scores, double target_cov);

Interval claps_interval(const PredictiveGaussian& pred, double t);
Interval residual_interval(double mu, double q);
Interval normcp_interval(double mu, double h, double q);

struct CqrIntervalResult {
  Interval interval;
  bool clamped = false;
};
/// [q_lo − q, q_hi + q]; crossed heads that leave this empty collapse to the
/// midpoint and report `clamped`.
CqrIntervalResult cqr_interval_checked(double q_lo, double q_hi, double q);
Interval cqr_interval(double q_lo, double q_hi, double q);

/// Scale floor applied to Normalized-CP heads at use time.
inline constexpr double kScaleFloor = 1e-3;

}  // namespace claps::conformal
