#pragma once

// Dense kernel for the last-layer head: Cholesky, triangular solves, ridge
// solve and quadratic forms. Row-major storage, no pivoting.

#include <cstddef>
#include <span>
#include <vector>

namespace claps::linalg {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& entries() const noexcept { return data_; }
  std::vector<double>& entries() noexcept { return data_; }

  DenseMatrix transpose() const;
  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Lower-triangular factor L with L·Lᵀ equal to the factored matrix.
struct CholeskyFactor {
  std::size_t dim = 0;
  DenseMatrix lower;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);
/// Aᵀx without forming the transpose.
std::vector<double> matvec_transposed(const DenseMatrix& a, std::span<const double> x);
/// AᵀA, exploiting symmetry.
DenseMatrix gram(const DenseMatrix& a);
double dot(std::span<const double> a, std::span<const double> b);
double frobenius_norm(const DenseMatrix& a);

/// Factor a symmetric positive definite matrix. Asymmetry below 1e-10
/// (relative to the largest entry) is symmetrized away; larger asymmetry
/// throws NotSymmetric. A non-positive pivot throws NotPositiveDefinite.
CholeskyFactor cholesky(const DenseMatrix& m);

/// Solves L·x = b by forward substitution.
std::vector<double> solve_lower(const CholeskyFactor& l, std::span<const double> b);
/// Solves Lᵀ·x = b by back substitution.
std::vector<double> solve_upper(const CholeskyFactor& l, std::span<const double> b);
/// Solves (L·Lᵀ)·x = b.
std::vector<double> solve_spd(const CholeskyFactor& l, std::span<const double> b);

/// φᵀM⁻¹φ computed as ‖L⁻¹φ‖².
double quad_form_via_chol(const CholeskyFactor& l, std::span<const double> phi);

/// Σᵢ ‖L⁻¹eᵢ‖², i.e. trace(M⁻¹).
double trace_inverse(const CholeskyFactor& l);

/// L·Lᵀ.
DenseMatrix reconstruct(const CholeskyFactor& l);

/// Precision λI + σ⁻²ΦᵀΦ.
DenseMatrix regularized_precision(const DenseMatrix& phi, double lambda, double sigma2);

/// Minimizer of (1/2σ²)‖y − Φw‖² + (λ/2)‖w‖².
std::vector<double> ridge_solve(const DenseMatrix& phi, std::span<const double> y, double lambda,
                                double sigma2);

/// Ridge solve that also hands back the factor of λI + σ⁻²ΦᵀΦ, so callers
/// needing both do not factor twice.
std::vector<double> ridge_solve(const DenseMatrix& phi, std::span<const double> y, double lambda,
                                double sigma2, CholeskyFactor& factor_out);

}  // namespace claps::linalg
