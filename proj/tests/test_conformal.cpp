#include "claps/conformal.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "claps/error.hpp"
#include "oracles.hpp"

using namespace claps;
using namespace claps::conformal;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(Scores, CentralityMatchesDefinition) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const PredictiveGaussian p{n01(rng), std::exp(n01(rng) / 3.0), 0.0};
    const double y = n01(rng);
    const double z = (y - p.mu) / std::sqrt(p.v);
    const double ref = std::min(oracle::phi_cdf(z), 1.0 - oracle::phi_cdf(z));
    EXPECT_NEAR(centrality_score(p, y), ref, 1e-15);
  }
  EXPECT_DOUBLE_EQ(centrality_score({1.0, 4.0, 0.0}, 1.0), 0.5);
}

TEST(Scores, CentralityStrictlyDecreasingInAbsZ) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 8.0);
  const PredictiveGaussian p{0.0, 1.0, 0.0};
  for (int i = 0; i < 20000; ++i) {
    double a = u(rng), b = u(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    EXPECT_GT(centrality_score(p, a), centrality_score(p, b));
    EXPECT_GT(centrality_score(p, -a), centrality_score(p, b));
  }
}

TEST(Scores, BaselineScores) {
  EXPECT_DOUBLE_EQ(abs_residual_score(1.0, -2.0), 3.0);
  EXPECT_DOUBLE_EQ(normalized_score(1.0, 2.0, 4.0), 1.5);
  EXPECT_DOUBLE_EQ(cqr_score(0.0, 1.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(cqr_score(0.0, 1.0, -0.25), 0.25);
  EXPECT_DOUBLE_EQ(cqr_score(0.0, 1.0, 3.0), 2.0);
  try {
    normalized_score(0.0, 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveScale);
  }
}

TEST(RankRule, IndicesAndEdgeCases) {
  std::vector<double> s{0.5, 0.1, 0.4, 0.2, 0.3};  // m = 5
  // lower: k = ⌈6·0.5⌉ = 3 → third smallest
  auto lo = rank_threshold_lower(s, 0.5);
  EXPECT_EQ(lo.k, 3u);
  EXPECT_DOUBLE_EQ(lo.value, 0.3);
  // k = ⌈6·0.1⌉ = 1
  EXPECT_EQ(rank_threshold_lower(s, 0.9).k, 1u);
  EXPECT_DOUBLE_EQ(rank_threshold_lower(s, 0.9).value, 0.1);
  // k = ⌈6·0.95⌉ = 6 > m → t = 0
  auto none = rank_threshold_lower(s, 0.05);
  EXPECT_EQ(none.k, 6u);
  EXPECT_EQ(none.value, 0.0);

  auto up = rank_threshold_upper(s, 0.5);
  EXPECT_EQ(up.k, 3u);
  EXPECT_DOUBLE_EQ(up.value, 0.3);
  auto inf = rank_threshold_upper(s, 0.9);  // ⌈5.4⌉ = 6 > 5
  EXPECT_EQ(inf.value, kInf);

  // (m+1)(1−cov) = 1000·0.1 lands on an integer despite rounding
  std::vector<double> big(999);
  std::iota(big.begin(), big.end(), 1.0);
  EXPECT_EQ(rank_threshold_lower(big, 0.9).k, 100u);
  EXPECT_EQ(rank_threshold_upper(big, 0.9).k, 900u);

  try {
    rank_threshold_lower(std::vector<double>{}, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCalibration);
  }
  auto cal = calibrate(Method::cqr, s, 0.5);
  EXPECT_EQ(cal.m, 5u);
  EXPECT_EQ(cal.rank_k, 3u);
  EXPECT_THROW(calibrate(Method::claps, s, 1.0), Error);
}

TEST(RankRule, TiesAreHandledDeterministically) {
  std::vector<double> s{0.2, 0.2, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(rank_threshold_lower(s, 0.5).value, 0.2);
  EXPECT_DOUBLE_EQ(rank_threshold_lower(s, 0.8).value, 0.1);
}

// For distinct scores every relative order of the m calibration scores and
// the test score is equally likely. Enumerate them all and count how often
// the implemented threshold accepts the test score.
TEST(RankRule, ExactAcceptanceByEnumeration) {
  for (std::size_t m = 1; m <= 6; ++m) {
    for (std::size_t k = 1; k <= m + 1; ++k) {
      // a coverage whose lower rank is exactly k: (m+1)(1−cov) = k − 0.5
      const double cov_lower = 1.0 - (static_cast<double>(k) - 0.5) / static_cast<double>(m + 1);
      const double cov_upper = (static_cast<double>(k) - 0.5) / static_cast<double>(m + 1);
      std::vector<int> perm(m + 1);
      std::iota(perm.begin(), perm.end(), 1);
      std::size_t total = 0, acc_lower = 0, acc_upper = 0;
      do {
        std::vector<double> cal(perm.begin(), perm.begin() + static_cast<long>(m));
        const double test = perm[m];
        const auto lo = rank_threshold_lower(cal, cov_lower);
        ASSERT_EQ(lo.k, k);
        const auto up = rank_threshold_upper(cal, cov_upper);
        ASSERT_EQ(up.k, k);
        if (test >= lo.value) ++acc_lower;
        if (test <= up.value) ++acc_upper;
        ++total;
      } while (std::next_permutation(perm.begin(), perm.end()));
      // {s* ≥ s_(k)} fails exactly when s* has rank ≤ k among the m+1;
      // k = m+1 gives t = 0, which accepts everything.
      const std::size_t accepted_ranks = k <= m ? m + 1 - k : m + 1;
      EXPECT_EQ(acc_lower * (m + 1), accepted_ranks * total) << "m=" << m << " k=" << k;
      // {s* ≤ s_(k)} holds exactly when s* has rank ≤ k.
      EXPECT_EQ(acc_upper * (m + 1), std::min(k, m + 1) * total) << "m=" << m << " k=" << k;
    }
  }
}

TEST(RankRule, UpperRuleCoverageIsAtLeastTarget) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t m = 99, trials = 40000;
  std::size_t accepted = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> cal(m);
    for (auto& v : cal) v = u(rng);
    if (u(rng) <= rank_threshold_upper(cal, 0.9).value) ++accepted;
  }
  const double p = 90.0 / 100.0;  // k = 90
  const double se = std::sqrt(p * (1 - p) / trials);
  EXPECT_NEAR(static_cast<double>(accepted) / trials, p, 4 * se);
}

TEST(Intervals, ClapsIntervalHasPosteriorMassOneMinusTwoT) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> ut(1e-6, 0.5 - 1e-6);
  std::normal_distribution<double> n01(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    const PredictiveGaussian p{n01(rng), std::exp(n01(rng)), 0.0};
    const double t = ut(rng);
    const auto iv = claps_interval(p, t);
    const double sd = std::sqrt(p.v);
    const double mass = oracle::phi_cdf((iv.hi - p.mu) / sd) - oracle::phi_cdf((iv.lo - p.mu) / sd);
    EXPECT_NEAR(mass, 1.0 - 2.0 * t, 1e-9);
    EXPECT_NEAR(iv.lo + iv.hi, 2.0 * p.mu, 1e-9 * std::max(1.0, std::abs(p.mu)));
  }
  const PredictiveGaussian p{2.0, 1.0, 0.0};
  EXPECT_EQ(claps_interval(p, 0.0).lo, -kInf);
  EXPECT_EQ(claps_interval(p, 0.0).hi, kInf);
  EXPECT_EQ(claps_interval(p, 0.5).width(), 0.0);
  EXPECT_NEAR(claps_interval(p, 0.05).width(), 2 * 1.6448536269514722, 1e-12);
}

TEST(Intervals, ScoreIntervalDuality) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> ut(0.001, 0.499);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::size_t violations = 0;
  for (int i = 0; i < 50000; ++i) {
    const PredictiveGaussian p{n01(rng), std::exp(n01(rng)), 0.0};
    const double t = ut(rng);
    const double y = p.mu + 3.0 * n01(rng) * std::sqrt(p.v);
    const auto iv = claps_interval(p, t);
    const double s = centrality_score(p, y);
    if (std::abs(s - t) < 1e-9) continue;  // boundary
    if (iv.contains(y) != (s >= t)) ++violations;
  }
  EXPECT_EQ(violations, 0u);
}

TEST(Intervals, BaselineDuality) {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> uq(0.0, 3.0);
  for (int i = 0; i < 20000; ++i) {
    const double mu = n01(rng), y = 2 * n01(rng), q = uq(rng), h = std::exp(n01(rng));
    const double a = n01(rng), b = a + std::abs(n01(rng));
    if (std::abs(abs_residual_score(mu, y) - q) > 1e-12) {
      EXPECT_EQ(residual_interval(mu, q).contains(y), abs_residual_score(mu, y) <= q);
    }
    if (std::abs(normalized_score(mu, h, y) - q) > 1e-12) {
      EXPECT_EQ(normcp_interval(mu, h, q).contains(y), normalized_score(mu, h, y) <= q);
    }
    if (std::abs(cqr_score(a, b, y) - q) > 1e-12) {
      EXPECT_EQ(cqr_interval(a, b, q).contains(y), cqr_score(a, b, y) <= q);
    }
  }
}

TEST(Intervals, BaselineEdgeCases) {
  EXPECT_THROW(residual_interval(0.0, -1.0), Error);
  EXPECT_THROW(normcp_interval(0.0, -1.0, 1.0), Error);
  EXPECT_EQ(normcp_interval(0.0, 1.0, kInf).hi, kInf);
  EXPECT_EQ(residual_interval(0.0, kInf).lo, -kInf);
  // crossed quantile heads that stay crossed after widening collapse to the midpoint
  auto crossed = cqr_interval_checked(2.0, 0.0, 0.5);
  EXPECT_TRUE(crossed.clamped);
  EXPECT_DOUBLE_EQ(crossed.interval.lo, 1.0);
  EXPECT_DOUBLE_EQ(crossed.interval.hi, 1.0);
  auto fine = cqr_interval_checked(2.0, 0.0, 1.5);
  EXPECT_FALSE(fine.clamped);
  EXPECT_DOUBLE_EQ(fine.interval.lo, 0.5);
  EXPECT_DOUBLE_EQ(fine.interval.hi, 1.5);
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::claps, Method::baseline_cp, Method::norm_cp, Method::cqr}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_THROW(method_from_string("bogus"), Error);
}
