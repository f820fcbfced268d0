#include "claps/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "claps/data.hpp"
#include "claps/distributions.hpp"
#include "claps/error.hpp"

namespace claps::diag {

std::string_view to_string(SplitKind s) {
  return s == SplitKind::calibration ? "calibration" : "test";
}

std::string_view to_string(Choice c) {
  switch (c) {
    case Choice::claps: return "claps";
    case Choice::scale_learning: return "scale_learning";
    case Choice::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double nearest_rank_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptySplit, "quantile of an empty set");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(s.size()) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, s.size());
  return s[k - 1];
}

Decomposition decompose_epi(std::vector<double> epi, double sigma2, double trace,
                            SplitKind split) {
  if (epi.empty()) throw Error(ErrorCode::EmptySplit, "cannot decompose an empty split");
  Decomposition out;
  out.r.reserve(epi.size());
  std::size_t below = 0;
  for (double e : epi) {
    const double r = e / (sigma2 + e);
    out.r.push_back(r);
    if (r < 0.01) ++below;
  }
  const auto n = static_cast<double>(epi.size());
  auto& s = out.summary;
  s.epi_mean = std::accumulate(epi.begin(), epi.end(), 0.0) / n;
  s.r_mean = std::accumulate(out.r.begin(), out.r.end(), 0.0) / n;
  s.r_median = nearest_rank_quantile(out.r, 0.5);
  s.r_q10 = nearest_rank_quantile(out.r, 0.1);
  s.r_q90 = nearest_rank_quantile(out.r, 0.9);
  s.frac_r_below_1pct = static_cast<double>(below) / n;
  s.trace_sigma = trace;
  s.sigma2 = sigma2;
  s.split = split;
  out.epi = std::move(epi);
  return out;
}

Decomposition decompose(const llla::LaplacePosterior& post, const DenseMatrix& phis,
                        SplitKind split) {
  if (phis.rows() == 0) throw Error(ErrorCode::EmptySplit, "cannot decompose an empty split");
  std::vector<double> epi(phis.rows());
  for (std::size_t i = 0; i < phis.rows(); ++i)
    epi[i] = linalg::quad_form_via_chol(post.chol_precision, phis.row(i));
  return decompose_epi(std::move(epi), post.sigma2, llla::trace_sigma(post), split);
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[idx[j]] == values[idx[i]]) ++j;
    // positions i..j-1 share the average of ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
    i = j;
  }
  return ranks;
}

SpearmanResult spearman(std::span<const double> abs_err, std::span<const double> pred_scale) {
  if (abs_err.size() != pred_scale.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(abs_err.size()) + " vs " +
                                               std::to_string(pred_scale.size()));
  }
  const std::size_t n = abs_err.size();
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "Spearman needs n >= 3");

  const auto ra = midranks(abs_err);
  const auto rb = midranks(pred_scale);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  SpearmanResult out;
  out.n = n;
  if (saa == 0.0 || sbb == 0.0) {
    // A constant input has no rank information.
    out.rho = 0.0;
    out.p_value = 1.0;
    return out;
  }
  out.rho = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  if (std::abs(out.rho) >= 1.0) {
    out.p_value = 0.0;
    return out;
  }
  const double dof = static_cast<double>(n - 2);
  const double t = out.rho * std::sqrt(dof / ((1.0 - out.rho) * (1.0 + out.rho)));
  out.p_value = std::clamp(dist::student_t_two_sided_p(t, dof), 0.0, 1.0);
  return out;
}

std::vector<SubsamplePoint> subsample_curves(const DenseMatrix& train_phi,
                                             std::span<const double> train_y_centered,
                                             const PosteriorConfig& config,
                                             std::span<const std::size_t> grid,
                                             const DenseMatrix& eval_phi, std::uint64_t seed) {
  const std::size_t n_total = train_phi.rows();
  if (train_y_centered.size() != n_total) {
    throw Error(ErrorCode::DimensionMismatch, "features and targets differ in length");
  }
  if (eval_phi.rows() == 0) throw Error(ErrorCode::EmptySplit, "evaluation split is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > n_total || grid[i] == 0) {
      throw Error(ErrorCode::GridExceedsData, "grid point " + std::to_string(grid[i]) +
                                                  " outside 1.." + std::to_string(n_total));
    }
    if (i > 0 && grid[i] < grid[i - 1]) {
      throw Error(ErrorCode::GridExceedsData, "grid must be ascending");
    }
  }

  const auto perm = data::seeded_permutation(n_total, seed);
  std::vector<SubsamplePoint> curve;
  for (std::size_t n : grid) {
    DenseMatrix phi(n, train_phi.cols());
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto src = train_phi.row(perm[i]);
      std::copy(src.begin(), src.end(), phi.row(i).begin());
      y[i] = train_y_centered[perm[i]];
    }
    const auto post = llla::fit_llla(phi, y, config.lambda, config.estimator);
    double epi_sum = 0.0;
    for (std::size_t i = 0; i < eval_phi.rows(); ++i)
      epi_sum += linalg::quad_form_via_chol(post.chol_precision, eval_phi.row(i));
    curve.push_back({n, epi_sum / static_cast<double>(eval_phi.rows()), llla::trace_sigma(post),
                     post.sigma2});
  }
  return curve;
}

std::vector<std::size_t> default_subsample_grid(std::size_t n_train, std::size_t points) {
  if (n_train == 0 || points == 0) return {};
  const double hi = static_cast<double>(n_train);
  const double lo = std::min(hi, std::max(50.0, 0.05 * hi));
  std::vector<std::size_t> grid;
  for (std::size_t i = 0; i < points; ++i) {
    const double f = points == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    auto n = static_cast<std::size_t>(std::llround(lo * std::pow(hi / lo, f)));
    n = std::clamp<std::size_t>(n, 1, n_train);
    if (grid.empty() || n > grid.back()) grid.push_back(n);
  }
  return grid;
}

SelectionVerdict select_method(double median_r, double trace, double rho,
                               const SelectionThresholds& th) {
  SelectionVerdict v{Choice::inconclusive, median_r, trace, rho, th};
  if (median_r > th.eps_r && trace > th.eps_trace && rho <= th.tau_rho) {
    v.choice = Choice::claps;
  } else if (median_r <= th.eps_r && rho > th.tau_rho) {
    v.choice = Choice::scale_learning;
  }
  return v;
}

SelectionVerdict select_method(const DecompositionSummary& summary, const SpearmanResult& sp,
                               const SelectionThresholds& th) {
  return select_method(summary.r_median, summary.trace_sigma, sp.rho, th);
}

}  // namespace claps::diag
