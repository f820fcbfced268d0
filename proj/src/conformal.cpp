#include "claps/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "claps/distributions.hpp"
#include "claps/error.hpp"

namespace claps::conformal {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// ⌈x⌉ that ignores floating-point dust above an integer, e.g.
// (m+1)·(1−0.9) evaluating to 3.0000000000000004.
std::size_t ceil_rank(double x) {
  const double r = std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)));
  return r < 1.0 ? 1 : static_cast<std::size_t>(r);
}

std::vector<double> sorted_copy(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyCalibration, "no calibration scores");
  std::vector<double> s(scores.begin(), scores.end());
  std::stable_sort(s.begin(), s.end());
  return s;
}

void check_q(double q) {
  if (std::isnan(q) || q < 0.0) throw Error(ErrorCode::NegativeQ, "q = " + std::to_string(q));
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::claps: return "claps";
    case Method::baseline_cp: return "baseline_cp";
    case Method::norm_cp: return "norm_cp";
    case Method::cqr: return "cqr";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "claps") return Method::claps;
  if (s == "baseline_cp" || s == "cp") return Method::baseline_cp;
  if (s == "norm_cp" || s == "normalized_cp") return Method::norm_cp;
  if (s == "cqr") return Method::cqr;
  throw Error(ErrorCode::ConfigInvalid, "unknown method '" + std::string(s) + "'");
}

double centrality_score(const PredictiveGaussian& pred, double y) {
  const double z = (y - pred.mu) / std::sqrt(pred.v);
  return dist::normal_two_sided_tail(z);
}

double abs_residual_score(double mu, double y) { return std::abs(y - mu); }

double normalized_score(double mu, double h, double y) {
  if (!(h > 0.0)) throw Error(ErrorCode::NonpositiveScale, "h = " + std::to_string(h));
  return std::abs(y - mu) / h;
}

double cqr_score(double q_lo, double q_hi, double y) {
  return std::max({q_lo - y, y - q_hi, 0.0});
}

RankThreshold rank_threshold_lower(std::span<const double> scores, double target_cov) {
  const auto s = sorted_copy(scores);
  const std::size_t m = s.size();
  const std::size_t k = ceil_rank(static_cast<double>(m + 1) * (1.0 - target_cov));
  return {k > m ? 0.0 : s[k - 1], k};
}

RankThreshold rank_threshold_upper(std::span<const double> scores, double target_cov) {
  const auto s = sorted_copy(scores);
  const std::size_t m = s.size();
  const std::size_t k = ceil_rank(static_cast<double>(m + 1) * target_cov);
  return {k > m ? kInf : s[k - 1], k};
}

CalibrationResult calibrate(Method method, std::span<const double> scores, double target_cov) {
  if (!(target_cov > 0.0 && target_cov < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "target coverage must lie in (0, 1)");
  }
  const auto r = method == Method::claps ? rank_threshold_lower(scores, target_cov)
                                         : rank_threshold_upper(scores, target_cov);
  return {method, r.value, scores.size(), target_cov, r.k};
}

Interval claps_interval(const PredictiveGaussian& pred, double t) {
  if (t <= 0.0) return {-kInf, kInf};
  if (t >= 0.5) return {pred.mu, pred.mu};
  // Φ⁻¹(t) = −Φ⁻¹(1−t); use the lower tail once for an exactly symmetric pair.
  const double half = -dist::normal_quantile(t) * std::sqrt(pred.v);
  return {pred.mu - half, pred.mu + half};
}

Interval residual_interval(double mu, double q) {
  check_q(q);
  return {mu - q, mu + q};
}

Interval normcp_interval(double mu, double h, double q) {
  if (!(h > 0.0)) throw Error(ErrorCode::NonpositiveScale, "h = " + std::to_string(h));
  check_q(q);
  if (std::isinf(q)) return {-kInf, kInf};
  return {mu - q * h, mu + q * h};
}

CqrIntervalResult cqr_interval_checked(double q_lo, double q_hi, double q) {
  check_q(q);
  Interval iv{q_lo - q, q_hi + q};
  if (iv.lo > iv.hi) {
    const double mid = 0.5 * (q_lo + q_hi);
    return {{mid, mid}, true};
  }
  return {iv, false};
}

Interval cqr_interval(double q_lo, double q_hi, double q) {
  return cqr_interval_checked(q_lo, q_hi, q).interval;
}

}  // namespace claps::conformal
