#include "claps/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "claps/error.hpp"

namespace claps::linalg {

namespace {

void require_dim(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require_dim(data_.size() == rows_ * cols_, "entries length must equal rows*cols");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    require_dim(rows[i].size() == c, "ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require_dim(a.cols() == b.rows(), "matmul inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto crow = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
  require_dim(a.cols() == x.size(), "matvec length mismatch");
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

std::vector<double> matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
  require_dim(a.rows() == x.size(), "matvec_transposed length mismatch");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    auto arow = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += arow[j] * xi;
  }
  return y;
}

DenseMatrix gram(const DenseMatrix& a) {
  const std::size_t d = a.cols();
  DenseMatrix g(d, d);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double ri = row[i];
      if (ri == 0.0) continue;
      double* gi = &g(i, 0);
      for (std::size_t j = i; j < d; ++j) gi[j] += ri * row[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_dim(a.size() == b.size(), "dot length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.entries()) s += v * v;
  return std::sqrt(s);
}

CholeskyFactor cholesky(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  require_dim(m.cols() == n, "cholesky needs a square matrix");

  double scale = 0.0;
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      scale = std::max(scale, std::abs(m(i, j)));
      asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
    }
  }
  if (asym > 1e-10 * std::max(scale, 1.0)) {
    throw Error(ErrorCode::NotSymmetric,
                "max |m_ij - m_ji| = " + std::to_string(asym) + " exceeds 1e-10 relative");
  }

  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    const double* lj = &l(j, 0);
    for (std::size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
    if (!(diag > 0.0)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(j) + " is " + std::to_string(diag));
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      // symmetrized entry (m_ij + m_ji)/2
      double s = 0.5 * (m(i, j) + m(j, i));
      const double* li = &l(i, 0);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      l(i, j) = s / ljj;
    }
  }
  return {n, std::move(l)};
}

std::vector<double> solve_lower(const CholeskyFactor& l, std::span<const double> b) {
  require_dim(b.size() == l.dim, "rhs length " + std::to_string(b.size()) + " != dim " +
                                     std::to_string(l.dim));
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t i = 0; i < l.dim; ++i) {
    const double* li = l.lower.row(i).data();
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * x[k];
    x[i] = s / li[i];
  }
  return x;
}

std::vector<double> solve_upper(const CholeskyFactor& l, std::span<const double> b) {
  require_dim(b.size() == l.dim, "rhs length " + std::to_string(b.size()) + " != dim " +
                                     std::to_string(l.dim));
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t ii = l.dim; ii-- > 0;) {
    x[ii] /= l.lower(ii, ii);
    const double xi = x[ii];
    const double* li = l.lower.row(ii).data();
    for (std::size_t k = 0; k < ii; ++k) x[k] -= li[k] * xi;
  }
  return x;
}

std::vector<double> solve_spd(const CholeskyFactor& l, std::span<const double> b) {
  return solve_upper(l, solve_lower(l, b));
}

double quad_form_via_chol(const CholeskyFactor& l, std::span<const double> phi) {
  const auto u = solve_lower(l, phi);
  double s = 0.0;
  for (double v : u) s += v * v;
  return s;
}

double trace_inverse(const CholeskyFactor& l) {
  const std::size_t n = l.dim;
  double total = 0.0;
  std::vector<double> u(n);
  for (std::size_t col = 0; col < n; ++col) {
    // L⁻¹e_col vanishes above index col.
    std::fill(u.begin(), u.end(), 0.0);
    u[col] = 1.0 / l.lower(col, col);
    double s = u[col] * u[col];
    for (std::size_t i = col + 1; i < n; ++i) {
      const double* li = l.lower.row(i).data();
      double acc = 0.0;
      for (std::size_t k = col; k < i; ++k) acc -= li[k] * u[k];
      u[i] = acc / li[i];
      s += u[i] * u[i];
    }
    total += s;
  }
  return total;
}

DenseMatrix reconstruct(const CholeskyFactor& l) { return matmul(l.lower, l.lower.transpose()); }

DenseMatrix regularized_precision(const DenseMatrix& phi, double lambda, double sigma2) {
  DenseMatrix m = gram(phi);
  const double inv_s2 = 1.0 / sigma2;
  for (double& v : m.entries()) v *= inv_s2;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += lambda;
  return m;
}

std::vector<double> ridge_solve(const DenseMatrix& phi, std::span<const double> y, double lambda,
                                double sigma2, CholeskyFactor& factor_out) {
  require_dim(phi.rows() == y.size(), "Phi rows " + std::to_string(phi.rows()) +
                                          " != y length " + std::to_string(y.size()));
  if (!(lambda > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "lambda must be > 0");
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "sigma2 must be > 0");

  factor_out = cholesky(regularized_precision(phi, lambda, sigma2));
  auto rhs = matvec_transposed(phi, y);
  for (double& v : rhs) v /= sigma2;
  return solve_spd(factor_out, rhs);
}

std::vector<double> ridge_solve(const DenseMatrix& phi, std::span<const double> y, double lambda,
                                double sigma2) {
  CholeskyFactor unused;
  return ridge_solve(phi, y, lambda, sigma2, unused);
}

}  // namespace claps::linalg
