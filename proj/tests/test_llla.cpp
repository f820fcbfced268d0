#include "claps/llla.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "claps/error.hpp"
#include "oracles.hpp"

using namespace claps;
using linalg::DenseMatrix;

namespace {

struct Problem {
  oracle::Matrix phi;
  std::vector<double> y;
};

Problem make_problem(std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Problem p{oracle::random_matrix(n, d, rng), std::vector<double>(n)};
  std::vector<double> w(d);
  for (auto& v : w) v = n01(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += p.phi[i][j] * w[j];
    p.y[i] = s + noise * n01(rng);
  }
  return p;
}

// Conjugate posterior of the Bayesian linear model: Σ = (λI + ΦᵀΦ/σ²)⁻¹,
// w = ΣΦᵀy/σ².
struct Conjugate {
  oracle::Matrix sigma;
  std::vector<double> w;
};

Conjugate conjugate(const Problem& p, double lambda, double sigma2) {
  const std::size_t d = p.phi[0].size();
  oracle::Matrix m(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      for (const auto& row : p.phi) m[i][j] += row[i] * row[j] / sigma2;
    }
    m[i][i] += lambda;
    for (std::size_t k = 0; k < p.y.size(); ++k) b[i] += p.phi[k][i] * p.y[k] / sigma2;
  }
  Conjugate c{oracle::inverse(m), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) c.w[i] += c.sigma[i][j] * b[j];
  return c;
}

double rss(const Problem& p, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) f += p.phi[i][j] * w[j];
    s += (p.y[i] - f) * (p.y[i] - f);
  }
  return s;
}

}  // namespace

TEST(Llla, PosteriorMatchesConjugateClosedForm) {
  const auto p = make_problem(60, 7, 0.4, 21);
  const auto phi = DenseMatrix::from_rows(p.phi);
  for (double lambda : {0.1, 1.0, 10.0}) {
    const auto post = llla::fit_llla(phi, p.y, lambda, llla::Sigma2Estimator::residual);
    const auto ref = conjugate(p, lambda, post.sigma2);
    for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(post.w_map[j], ref.w[j], 1e-10);

    std::mt19937_64 rng(3);
    const auto x = oracle::random_matrix(10, 7, rng);
    for (const auto& row : x) {
      const auto g = llla::predictive(post, row, 2.5);
      const double epi = oracle::quad_form(ref.sigma, row);
      double mu = 2.5;
      for (std::size_t j = 0; j < 7; ++j) mu += row[j] * ref.w[j];
      EXPECT_NEAR(g.epi, epi, 1e-10 * std::max(1.0, epi));
      EXPECT_NEAR(g.mu, mu, 1e-10);
      EXPECT_DOUBLE_EQ(g.v, post.sigma2 + g.epi);
    }
    EXPECT_NEAR(llla::trace_sigma(post), oracle::trace(ref.sigma), 1e-10);
    EXPECT_EQ(post.d, 7u);
    EXPECT_EQ(post.n_train, 60u);
  }
}

TEST(Llla, ResidualEstimatorUsesUnitScaledRidge) {
  const auto p = make_problem(80, 5, 0.7, 22);
  const double lambda = 2.0;
  const auto ref = conjugate(p, lambda, 1.0);  // σ² = 1 gives (ΦᵀΦ + λI)⁻¹Φᵀy
  const double expect = rss(p, ref.w) / 80.0;
  EXPECT_NEAR(llla::estimate_sigma2_residual(DenseMatrix::from_rows(p.phi), p.y, lambda), expect,
              1e-12);
}

TEST(Llla, ResidualEstimatorIsFloored) {
  DenseMatrix phi = DenseMatrix::from_rows({{1.0}, {2.0}, {3.0}});
  std::vector<double> y{0.0, 0.0, 0.0};
  EXPECT_EQ(llla::estimate_sigma2_residual(phi, y, 1.0), llla::kSigma2Floor);
}

TEST(Llla, EvidenceIsAFixedPoint) {
  const auto p = make_problem(200, 8, 0.5, 23);
  const double lambda = 1.0;
  const double s2 = llla::estimate_sigma2_evidence(DenseMatrix::from_rows(p.phi), p.y, lambda);
  const auto ref = conjugate(p, lambda, s2);
  const double gamma = 8.0 - lambda * oracle::trace(ref.sigma);
  EXPECT_NEAR(s2, rss(p, ref.w) / (200.0 - gamma), 1e-5 * s2);
}

TEST(Llla, EstimatorsRecoverNoiseLevel) {
  const auto p = make_problem(4000, 6, 0.5, 24);
  const auto phi = DenseMatrix::from_rows(p.phi);
  EXPECT_NEAR(llla::estimate_sigma2_residual(phi, p.y, 1.0), 0.25, 0.02);
  EXPECT_NEAR(llla::estimate_sigma2_evidence(phi, p.y, 1.0), 0.25, 0.02);
}

TEST(Llla, EvidenceDegenerateDof) {
  // n = 2 rows with d = 4 features: γ ≈ 2 leaves no residual degrees of freedom
  const auto p = make_problem(2, 4, 0.1, 25);
  try {
    llla::estimate_sigma2_evidence(DenseMatrix::from_rows(p.phi), p.y, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateDof);
  }
}

TEST(Llla, EpistemicShrinksWithMoreData) {
  const auto p = make_problem(2000, 4, 0.3, 26);
  const std::vector<double> probe{0.5, -1.0, 0.25, 2.0};
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {20u, 80u, 320u, 1280u}) {
    Problem sub{{p.phi.begin(), p.phi.begin() + static_cast<long>(n)},
                {p.y.begin(), p.y.begin() + static_cast<long>(n)}};
    const auto post = llla::fit_llla(DenseMatrix::from_rows(sub.phi), sub.y, 1.0,
                                     llla::Sigma2Estimator::residual);
    const double epi = llla::predictive(post, probe, 0.0).epi;
    EXPECT_LT(epi, prev);
    prev = epi;
  }
}

TEST(Llla, InputValidation) {
  DenseMatrix phi(3, 2, 1.0);
  std::vector<double> y{1, 2};
  EXPECT_THROW(llla::fit_llla(phi, y, 1.0, llla::Sigma2Estimator::residual), Error);
  std::vector<double> y3{1, 2, 3};
  EXPECT_THROW(llla::fit_llla(phi, y3, 0.0, llla::Sigma2Estimator::residual), Error);
  const auto post = llla::fit_llla(phi, y3, 1.0, llla::Sigma2Estimator::residual);
  EXPECT_THROW(llla::predictive(post, std::vector<double>{1.0}, 0.0), Error);
  EXPECT_EQ(llla::sigma2_estimator_from_string("eb"), llla::Sigma2Estimator::evidence);
  EXPECT_EQ(llla::sigma2_estimator_from_string("residual"), llla::Sigma2Estimator::residual);
  EXPECT_THROW(llla::sigma2_estimator_from_string("mle"), Error);
}
