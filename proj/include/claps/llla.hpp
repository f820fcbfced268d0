#pragma once

// Last-layer Laplace approximation on frozen features: MAP weights, the
// Cholesky factor of M = λI + σ⁻²ΦᵀΦ, and the Gaussian posterior predictive.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "claps/linalg.hpp"

namespace claps::llla {

using linalg::CholeskyFactor;
using linalg::DenseMatrix;

enum class Sigma2Estimator { residual, evidence };

std::string_view to_string(Sigma2Estimator e);
Sigma2Estimator sigma2_estimator_from_string(std::string_view s);

inline constexpr double kSigma2Floor = 1e-8;
inline constexpr double kDefaultLambda = 1.0;

struct LaplacePosterior {
  std::vector<double> w_map;
  CholeskyFactor chol_precision;
  double lambda = kDefaultLambda;
  double sigma2 = 1.0;
  std::size_t d = 0;
  std::size_t n_train = 0;
  Sigma2Estimator sigma2_estimator = Sigma2Estimator::residual;
};

/// Predictive N(mu, v) in original target units, with v = sigma2 + epi.
struct PredictiveGaussian {
  double mu = 0.0;
  double v = 1.0;
  double epi = 0.0;
};

/// ‖y − Φw‖²/n with w = (ΦᵀΦ + λI)⁻¹Φᵀy (unit noise scaling), floored.
double estimate_sigma2_residual(const DenseMatrix& phi, std::span<const double> y_centered,
                                double lambda);

/// MacKay fixed point: γ = d − λ·tr(M⁻¹), σ² ← ‖y − Φw‖²/(n − γ), iterated
/// to 1e-6 relative change or 100 rounds. Throws DegenerateDof when n − γ ≤ 1.
double estimate_sigma2_evidence(const DenseMatrix& phi, std::span<const double> y_centered,
                                double lambda);

LaplacePosterior fit_llla(const DenseMatrix& phi, std::span<const double> y_centered,
                          double lambda, Sigma2Estimator estimator);

PredictiveGaussian predictive(const LaplacePosterior& post, std::span<const double> phi,
                              double target_center);

/// trace(Σ) = trace(M⁻¹).
double trace_sigma(const LaplacePosterior& post);

}  // namespace claps::llla
