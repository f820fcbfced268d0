#include "claps/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "claps/error.hpp"
#include "oracles.hpp"

using namespace claps;
using namespace claps::eval;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(Coverage, CountsClosedIntervals) {
  std::vector<Interval> iv{{0, 1}, {0, 1}, {0, 1}, {-kInf, kInf}};
  std::vector<double> y{0.0, 1.0, 1.5, 1e300};
  const auto c = coverage_count(iv, y);
  EXPECT_EQ(c.covered, 3u);
  EXPECT_EQ(c.n, 4u);
  EXPECT_DOUBLE_EQ(coverage(iv, y), 0.75);
  EXPECT_THROW(coverage(iv, std::vector<double>{1.0}), Error);
}

TEST(Width, MeanAndInfiniteSentinel) {
  std::vector<Interval> iv{{0, 1}, {0, 3}};
  EXPECT_DOUBLE_EQ(mean_width(iv), 2.0);
  iv.push_back({-kInf, 0});
  EXPECT_EQ(mean_width(iv), kInf);
  EXPECT_THROW(mean_width(std::vector<Interval>{}), Error);
}

TEST(Mae, Definition) {
  EXPECT_DOUBLE_EQ(mae(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 1}), 1.0);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Wilson, MatchesClosedForm) {
  for (double conf : {0.9, 0.95, 0.99}) {
    const double z = oracle::phi_inv(0.5 + conf / 2);
    for (auto [k, n] : {std::pair{1, 10}, {5, 10}, {9, 10}, {900, 1000}, {4321, 5000}, {3, 7}}) {
      const auto ref = oracle::wilson(k, n, z);
      const auto b = wilson_interval(k, n, conf);
      EXPECT_NEAR(b.lo, ref.first, 1e-10);
      EXPECT_NEAR(b.hi, ref.second, 1e-10);
    }
  }
}

TEST(Wilson, Boundaries) {
  const auto all = wilson_interval(20, 20);
  EXPECT_EQ(all.hi, 1.0);
  EXPECT_LT(all.lo, 1.0);
  const auto none = wilson_interval(0, 20);
  EXPECT_EQ(none.lo, 0.0);
  EXPECT_GT(none.hi, 0.0);
  try {
    wilson_interval(3, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidCounts);
  }
  EXPECT_THROW(wilson_interval(0, 0), Error);
}

TEST(TInterval, MatchesClosedFormQuantiles) {
  // k values → k − 1 dof; closed forms exist for 1, 2 and 4 dof.
  const std::vector<std::vector<double>> samples{{1.0, 2.5}, {0.3, 0.9, 0.4}, {5, 7, 6, 9, 4}};
  for (double conf : {0.9, 0.95}) {
    for (const auto& s : samples) {
      const int dof = static_cast<int>(s.size()) - 1;
      double m = 0;
      for (double v : s) m += v;
      m /= s.size();
      double ss = 0;
      for (double v : s) ss += (v - m) * (v - m);
      const double sd = std::sqrt(ss / dof);
      const double half = oracle::t_quantile_closed(0.5 + conf / 2, dof) * sd / std::sqrt(s.size());
      const auto b = t_interval(s, conf);
      EXPECT_NEAR(b.lo, m - half, 1e-10);
      EXPECT_NEAR(b.hi, m + half, 1e-10);
    }
  }
  try {
    t_interval(std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewSeeds);
  }
}

TEST(Aggregate, PoolsCountsAndSummarizesSeeds) {
  std::vector<MetricsRow> rows(3);
  const double cov[] = {0.9, 0.8, 0.85}, wid[] = {1.0, 2.0, 3.0};
  for (int i = 0; i < 3; ++i) {
    rows[i].method = Method::norm_cp;
    rows[i].coverage = cov[i];
    rows[i].covered = static_cast<std::size_t>(cov[i] * 100);
    rows[i].n_test = 100;
    rows[i].width_mean = wid[i];
    rows[i].mae = 0.5;
    rows[i].seed = static_cast<std::uint64_t>(i);
  }
  const auto a = aggregate(rows);
  EXPECT_EQ(a.method, Method::norm_cp);
  EXPECT_NEAR(a.coverage_mean, 0.85, 1e-15);
  EXPECT_NEAR(a.coverage_sd, 0.05, 1e-15);
  EXPECT_NEAR(a.width_sd, 1.0, 1e-15);
  const auto w = wilson_interval(255, 300);
  EXPECT_EQ(a.coverage_wilson.lo, w.lo);
  EXPECT_EQ(a.width_t.lo, t_interval(std::vector<double>{1, 2, 3}).lo);
  EXPECT_EQ(a.seeds.size(), 3u);

  rows[1].width_mean = kInf;
  rows[1].width_infinite = true;
  const auto b = aggregate(rows);
  EXPECT_TRUE(b.width_infinite);
  EXPECT_EQ(b.width_mean, kInf);

  const auto single = aggregate(std::span(rows).first(1));
  EXPECT_EQ(single.width_t.lo, single.width_mean);
  EXPECT_THROW(aggregate(std::vector<MetricsRow>{}), Error);
}
