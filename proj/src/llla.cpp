#include "claps/llla.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "claps/error.hpp"

namespace claps::llla {

std::string_view to_string(Sigma2Estimator e) {
  return e == Sigma2Estimator::residual ? "residual" : "evidence";
}

Sigma2Estimator sigma2_estimator_from_string(std::string_view s) {
  if (s == "residual" || s == "res") return Sigma2Estimator::residual;
  if (s == "evidence" || s == "eb") return Sigma2Estimator::evidence;
  throw Error(ErrorCode::ConfigInvalid, "unknown sigma2 estimator '" + std::string(s) + "'");
}

namespace {

void check_inputs(const DenseMatrix& phi, std::span<const double> y, double lambda) {
  if (phi.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "Phi has " + std::to_string(phi.rows()) +
                                                  " rows but y has " + std::to_string(y.size()));
  }
  if (y.empty()) throw Error(ErrorCode::DimensionMismatch, "need at least one training row");
  if (!(lambda > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "lambda must be > 0");
}

double residual_sum_squares(const DenseMatrix& phi, std::span<const double> y,
                            std::span<const double> w) {
  double rss = 0.0;
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    const double r = y[i] - linalg::dot(phi.row(i), w);
    rss += r * r;
  }
  return rss;
}

}  // namespace

double estimate_sigma2_residual(const DenseMatrix& phi, std::span<const double> y_centered,
                                double lambda) {
  check_inputs(phi, y_centered, lambda);
  // (ΦᵀΦ + λI)⁻¹Φᵀy is the ridge solve with σ² = 1.
  const auto w = linalg::ridge_solve(phi, y_centered, lambda, 1.0);
  const double s2 =
      residual_sum_squares(phi, y_centered, w) / static_cast<double>(y_centered.size());
  return std::max(s2, kSigma2Floor);
}

double estimate_sigma2_evidence(const DenseMatrix& phi, std::span<const double> y_centered,
                                double lambda) {
  check_inputs(phi, y_centered, lambda);
  const auto n = static_cast<double>(y_centered.size());
  const auto d = static_cast<double>(phi.cols());

  double sigma2 = estimate_sigma2_residual(phi, y_centered, lambda);
  for (int iter = 0; iter < 100; ++iter) {
    CholeskyFactor l;
    const auto w = linalg::ridge_solve(phi, y_centered, lambda, sigma2, l);
    const double gamma = d - lambda * linalg::trace_inverse(l);
    const double dof = n - gamma;
    if (!(dof > 1.0)) {
      throw Error(ErrorCode::DegenerateDof,
                  "n - gamma = " + std::to_string(dof) + " <= 1; use the residual estimator");
    }
    const double next = std::max(residual_sum_squares(phi, y_centered, w) / dof, kSigma2Floor);
    const double rel = std::abs(next - sigma2) / sigma2;
    sigma2 = next;
    if (rel < 1e-6) break;
  }
  return sigma2;
}

LaplacePosterior fit_llla(const DenseMatrix& phi, std::span<const double> y_centered,
                          double lambda, Sigma2Estimator estimator) {
  check_inputs(phi, y_centered, lambda);
  LaplacePosterior post;
  post.lambda = lambda;
  post.d = phi.cols();
  post.n_train = phi.rows();
  post.sigma2_estimator = estimator;
  post.sigma2 = estimator == Sigma2Estimator::residual
                    ? estimate_sigma2_residual(phi, y_centered, lambda)
                    : estimate_sigma2_evidence(phi, y_centered, lambda);
  post.w_map = linalg::ridge_solve(phi, y_centered, lambda, post.sigma2, post.chol_precision);
  return post;
}

PredictiveGaussian predictive(const LaplacePosterior& post, std::span<const double> phi,
                              double target_center) {
  if (phi.size() != post.d) {
    throw Error(ErrorCode::DimensionMismatch, "feature length " + std::to_string(phi.size()) +
                                                  " != posterior dim " + std::to_string(post.d));
  }
  PredictiveGaussian g;
  g.epi = linalg::quad_form_via_chol(post.chol_precision, phi);
  g.mu = linalg::dot(phi, post.w_map) + target_center;
  g.v = post.sigma2 + g.epi;
  return g;
}

double trace_sigma(const LaplacePosterior& post) {
  return linalg::trace_inverse(post.chol_precision);
}

}  // namespace claps::llla
