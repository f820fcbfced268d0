#include "claps/diagnostics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "claps/error.hpp"
#include "oracles.hpp"

using namespace claps;
using namespace claps::diag;
using linalg::DenseMatrix;

TEST(Quantile, NearestRank) {
  std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_EQ(nearest_rank_quantile(v, 0.5), 3.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.1), 1.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.2), 1.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.21), 2.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.9), 5.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.0), 1.0);
  EXPECT_EQ(nearest_rank_quantile(v, 1.0), 5.0);
  EXPECT_THROW(nearest_rank_quantile(std::vector<double>{}, 0.5), Error);
}

TEST(Decomposition, ShareAndSummary) {
  const std::vector<double> epi{0.0, 0.001, 0.01, 0.1, 1.0};
  const auto d = decompose_epi(epi, 0.1, 3.0, SplitKind::test);
  for (std::size_t i = 0; i < epi.size(); ++i) {
    EXPECT_NEAR(d.r[i], epi[i] / (0.1 + epi[i]), 1e-15);
    EXPECT_GE(d.r[i], 0.0);
    EXPECT_LT(d.r[i], 1.0);
  }
  EXPECT_NEAR(d.summary.epi_mean, 1.111 / 5.0, 1e-15);
  EXPECT_NEAR(d.summary.frac_r_below_1pct, 2.0 / 5.0, 1e-15);  // r = 0 and r ≈ 0.0099
  EXPECT_NEAR(d.summary.r_median, 0.01 / 0.11, 1e-15);
  EXPECT_EQ(d.summary.trace_sigma, 3.0);
  EXPECT_EQ(d.summary.split, SplitKind::test);
  EXPECT_THROW(decompose_epi({}, 1.0, 1.0, SplitKind::test), Error);
}

TEST(Decomposition, FromPosteriorMatchesQuadForms) {
  std::mt19937_64 rng(31);
  const auto phi = oracle::random_matrix(50, 4, rng);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < 50; ++i) y[i] = phi[i][0] - phi[i][2];
  const auto post = llla::fit_llla(DenseMatrix::from_rows(phi), y, 1.0,
                                   llla::Sigma2Estimator::residual);
  const auto eval = oracle::random_matrix(9, 4, rng);
  const auto d = decompose(post, DenseMatrix::from_rows(eval));
  for (std::size_t i = 0; i < 9; ++i)
    EXPECT_NEAR(d.epi[i], llla::predictive(post, eval[i], 0.0).epi, 1e-14);
  EXPECT_NEAR(d.summary.trace_sigma, llla::trace_sigma(post), 1e-14);
}

TEST(Spearman, MidranksMatchCountingOracle) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> u(0, 6);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(15);
    for (auto& x : v) x = u(rng);
    const auto r = midranks(v);
    const auto ref = oracle::count_ranks(v);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(r[i], ref[i]);
  }
}

TEST(Spearman, RhoMatchesBruteForce) {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> ties(0, 9);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rep % 2 ? ties(rng) : n01(rng);
      b[i] = a[i] + (rep % 3 ? ties(rng) : n01(rng));
    }
    EXPECT_NEAR(spearman(a, b).rho, oracle::spearman(a, b), 1e-12);
  }
}

TEST(Spearman, PValueClosedFormsForSmallN) {
  // n = 3 → 1 dof (Cauchy); n = 4 → 2 dof: P(|T| ≥ t) = 1 − t/√(2 + t²)
  const std::vector<double> a3{1, 2, 3}, b3{1, 3, 2};
  const auto r3 = spearman(a3, b3);
  const double t3 = r3.rho * std::sqrt(1.0 / (1 - r3.rho * r3.rho));
  EXPECT_NEAR(r3.p_value, 1.0 - 2.0 * std::atan(std::abs(t3)) / std::numbers::pi, 1e-12);

  const std::vector<double> a4{1, 2, 3, 4}, b4{2, 1, 4, 3};
  const auto r4 = spearman(a4, b4);
  EXPECT_NEAR(r4.rho, 0.6, 1e-15);
  const double t4 = r4.rho * std::sqrt(2.0 / (1 - r4.rho * r4.rho));
  EXPECT_NEAR(r4.p_value, 1.0 - std::abs(t4) / std::sqrt(2.0 + t4 * t4), 1e-12);
}

TEST(Spearman, EdgeCases) {
  const std::vector<double> a{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(spearman(a, a).rho, 1.0);
  EXPECT_EQ(spearman(a, a).p_value, 0.0);
  const std::vector<double> rev{4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(a, rev).rho, -1.0);
  const std::vector<double> flat{2, 2, 2, 2};
  EXPECT_EQ(spearman(a, flat).rho, 0.0);
  EXPECT_EQ(spearman(a, flat).p_value, 1.0);
  try {
    spearman(a, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  try {
    spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
  }
}

TEST(Subsample, DefaultGrid) {
  const auto g = default_subsample_grid(10000);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 500u);
  EXPECT_EQ(g.back(), 10000u);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_GT(g[i], g[i - 1]);
    EXPECT_NEAR(static_cast<double>(g[i]) / g[i - 1], std::pow(20.0, 0.25), 0.01);
  }
  EXPECT_EQ(default_subsample_grid(200).front(), 50u);
  EXPECT_EQ(default_subsample_grid(30).front(), 30u);
}

TEST(Subsample, CurvesContractAndReplay) {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto phi = oracle::random_matrix(3000, 6, rng);
  std::vector<double> y(3000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = phi[i][0] + 0.5 * n01(rng);
  const auto eval = DenseMatrix::from_rows(oracle::random_matrix(200, 6, rng));
  const std::vector<std::size_t> grid{50, 200, 800, 3000};
  const auto train = DenseMatrix::from_rows(phi);
  const auto c = subsample_curves(train, y, {}, grid, eval, 7);
  ASSERT_EQ(c.size(), 4u);
  for (std::size_t i = 1; i < c.size(); ++i) {
    EXPECT_LT(c[i].epi_mean, c[i - 1].epi_mean);
    EXPECT_LT(c[i].trace_sigma, c[i - 1].trace_sigma);
  }
  const auto again = subsample_curves(train, y, {}, grid, eval, 7);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].epi_mean, again[i].epi_mean);

  const std::vector<std::size_t> too_big{50, 3001};
  try {
    subsample_curves(train, y, {}, too_big, eval, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridExceedsData);
  }
}

TEST(Selection, RuleTruthTable) {
  EXPECT_EQ(select_method(0.05, 2.0, 0.1).choice, Choice::claps);
  EXPECT_EQ(select_method(0.05, 0.5, 0.1).choice, Choice::inconclusive);  // small trace
  EXPECT_EQ(select_method(0.05, 2.0, 0.3).choice, Choice::inconclusive);  // high rho
  EXPECT_EQ(select_method(0.01, 2.0, 0.3).choice, Choice::scale_learning);
  EXPECT_EQ(select_method(0.01, 2.0, 0.1).choice, Choice::inconclusive);
  // boundaries: r = ε_r counts as small, ρ = τ_ρ counts as low
  EXPECT_EQ(select_method(0.02, 5.0, 0.3).choice, Choice::scale_learning);
  EXPECT_EQ(select_method(0.03, 5.0, 0.2).choice, Choice::claps);
  SelectionThresholds th{0.1, 10.0, 0.5};
  EXPECT_EQ(select_method(0.05, 2.0, 0.6, th).choice, Choice::scale_learning);
}
