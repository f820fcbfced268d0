#pragma once

// Variance decomposition, heteroscedasticity signal, subsample contraction
// curves and the CLAPS-vs-scale-learning selection rule.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "claps/llla.hpp"

namespace claps::diag {

using linalg::DenseMatrix;

enum class SplitKind { calibration, test };
std::string_view to_string(SplitKind s);

struct DecompositionSummary {
  double epi_mean = 0.0;
  double r_mean = 0.0;
  double r_median = 0.0;
  double r_q10 = 0.0;
  double r_q90 = 0.0;
  double frac_r_below_1pct = 0.0;
  double trace_sigma = 0.0;
  double sigma2 = 0.0;
  SplitKind split = SplitKind::calibration;
};

struct Decomposition {
  std::vector<double> epi;
  std::vector<double> r;
  DecompositionSummary summary;
};

/// Nearest-rank quantile: ascending element at ⌈p·n⌉ (1-based, at least 1).
double nearest_rank_quantile(std::span<const double> values, double p);

/// epi = φᵀΣφ, r = epi/(σ² + epi) per row of `phis`.
Decomposition decompose(const llla::LaplacePosterior& post, const DenseMatrix& phis,
                        SplitKind split = SplitKind::calibration);

/// Same, for callers that already have the per-point epistemic terms.
Decomposition decompose_epi(std::vector<double> epi, double sigma2, double trace,
                            SplitKind split);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Midranks (average rank for ties), 1-based.
std::vector<double> midranks(std::span<const double> values);

/// Pearson correlation of midranks; two-sided p from the Student-t
/// approximation with n − 2 degrees of freedom.
SpearmanResult spearman(std::span<const double> abs_err, std::span<const double> pred_scale);

struct SubsamplePoint {
  std::size_t n = 0;
  double epi_mean = 0.0;
  double trace_sigma = 0.0;
  double sigma2 = 0.0;
};

struct PosteriorConfig {
  double lambda = llla::kDefaultLambda;
  llla::Sigma2Estimator estimator = llla::Sigma2Estimator::residual;
};

/// Refits the head on the first n rows of a seeded shuffle of the training
/// features for each n in `grid` and evaluates on `eval_phi`.
std::vector<SubsamplePoint> subsample_curves(const DenseMatrix& train_phi,
                                             std::span<const double> train_y_centered,
                                             const PosteriorConfig& config,
                                             std::span<const std::size_t> grid,
                                             const DenseMatrix& eval_phi, std::uint64_t seed);

/// Five geometric points from max(50, 5% of n) to n.
std::vector<std::size_t> default_subsample_grid(std::size_t n_train, std::size_t points = 5);

struct SelectionThresholds {
  double eps_r = 0.02;
  double eps_trace = 1.0;
  double tau_rho = 0.2;
};

enum class Choice { claps, scale_learning, inconclusive };
std::string_view to_string(Choice c);

struct SelectionVerdict {
  Choice choice = Choice::inconclusive;
  double median_r = 0.0;
  double trace = 0.0;
  double rho = 0.0;
  SelectionThresholds thresholds;
};

/// claps ⇔ median r > ε_r ∧ T > ε_T ∧ ρ ≤ τ_ρ;
/// scale_learning ⇔ median r ≤ ε_r ∧ ρ > τ_ρ; otherwise inconclusive.
SelectionVerdict select_method(double median_r, double trace, double rho,
                               const SelectionThresholds& thresholds = {});
SelectionVerdict select_method(const DecompositionSummary& summary, const SpearmanResult& sp,
                               const SelectionThresholds& thresholds = {});

}  // namespace claps::diag
