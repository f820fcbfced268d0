#include "claps/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "claps/distributions.hpp"
#include "claps/error.hpp"
#include "claps/report.hpp"

using namespace claps;
using namespace claps::eval;

namespace {

ExperimentConfig smoke_config() {
  ExperimentConfig c;
  c.run_name = "smoke";
  c.dataset.kind = DatasetConfig::Kind::linear_gaussian;
  c.dataset.n = 2000;
  c.dataset.d = 4;
  c.dataset.sigma = 0.5;
  c.backbone.hidden_widths = {16, 16};
  c.train.epochs = 15;
  c.head_train.epochs = 15;
  c.seeds = {0};
  c.save_models = false;
  return c;
}

const AggregateRow* find(const ExperimentReport& r, Method m) {
  for (const auto& a : r.aggregates)
    if (a.method == m) return &a;
  return nullptr;
}

}  // namespace

TEST(Experiment, SmokeRunCoversAllMethods) {
  const auto rep = run_experiment(smoke_config());
  ASSERT_EQ(rep.seeds.size(), 1u);
  const auto& s = rep.seeds[0];
  ASSERT_TRUE(s.fatal_error.empty()) << s.fatal_error;
  EXPECT_TRUE(s.failures.empty());
  ASSERT_EQ(s.rows.size(), 4u);
  EXPECT_EQ(s.n_cal, 400u);
  EXPECT_EQ(s.n_test, 400u);
  for (const auto& row : s.rows) {
    EXPECT_GE(row.coverage, 0.85) << conformal::to_string(row.method);
    EXPECT_LE(row.coverage, 0.95) << conformal::to_string(row.method);
    EXPECT_EQ(row.covered, static_cast<std::size_t>(std::lround(row.coverage * row.n_test)));
    EXPECT_EQ(row.m_cal, 400u);
  }
  EXPECT_TRUE(s.audit.coverage_recount_ok);
  EXPECT_TRUE(s.audit.claps_width_ok);
  EXPECT_LE(s.audit.claps_width_max_abs_diff, 1e-9);
  ASSERT_TRUE(s.diagnostics.has_value());
  EXPECT_GT(s.diagnostics->backbone_initial_loss, s.diagnostics->backbone_final_loss);
  EXPECT_FALSE(rep.any_failure());
}

TEST(Experiment, ClapsWidthMatchesClosedForm) {
  const auto rep = run_experiment(smoke_config());
  const auto& s = rep.seeds[0];
  const double zq = dist::normal_quantile(1.0 - s.claps_t);
  double sum = 0.0;
  for (double v : s.test_v) sum += 2.0 * std::sqrt(v) * zq;
  const auto* claps = &s.rows[0];
  ASSERT_EQ(claps->method, Method::claps);
  EXPECT_NEAR(claps->width_mean, sum / static_cast<double>(s.test_v.size()), 1e-9);
  EXPECT_EQ(claps->threshold, s.claps_t);
}

TEST(Experiment, SingleMethodAndAggregation) {
  auto cfg = smoke_config();
  cfg.methods = {Method::baseline_cp};
  cfg.seeds = {3, 4, 5};
  cfg.dataset.n = 600;
  const auto rep = run_experiment(cfg);
  ASSERT_EQ(rep.aggregates.size(), 1u);
  std::vector<double> cov;
  std::size_t covered = 0, n = 0;
  for (const auto& s : rep.seeds) {
    ASSERT_EQ(s.rows.size(), 1u);
    EXPECT_EQ(s.rows[0].method, Method::baseline_cp);
    cov.push_back(s.rows[0].coverage);
    covered += s.rows[0].covered;
    n += s.rows[0].n_test;
  }
  const auto& a = rep.aggregates[0];
  const double m = (cov[0] + cov[1] + cov[2]) / 3.0;
  double ss = 0.0;
  for (double c : cov) ss += (c - m) * (c - m);
  EXPECT_NEAR(a.coverage_mean, m, 1e-15);
  EXPECT_NEAR(a.coverage_sd, std::sqrt(ss / 2.0), 1e-15);
  EXPECT_EQ(a.coverage_wilson.lo, wilson_interval(covered, n, cfg.conf_level).lo);
  EXPECT_EQ(a.seeds, (std::vector<std::uint64_t>{3, 4, 5}));
}

TEST(Experiment, ReplayIsByteIdentical) {
  auto cfg = smoke_config();
  cfg.dataset.n = 500;
  cfg.seeds = {1, 2};
  const auto a = report::report_to_json(run_experiment(cfg)).dump();
  const auto b = report::report_to_json(run_experiment(cfg)).dump();
  EXPECT_EQ(a, b);
  cfg.workers = 2;
  auto parallel = report::report_to_json(run_experiment(cfg));
  parallel["config"]["workers"] = 1;
  EXPECT_EQ(parallel.dump(), a);
  cfg.seeds = {1, 3};
  EXPECT_NE(report::report_to_json(run_experiment(cfg)).dump(), a);
}

TEST(Experiment, InjectedFailureIsPartial) {
  auto cfg = smoke_config();
  cfg.dataset.n = 500;
  cfg.inject_failure = {Method::cqr};
  const auto rep = run_experiment(cfg);
  const auto& s = rep.seeds[0];
  ASSERT_EQ(s.failures.size(), 1u);
  EXPECT_EQ(s.failures[0].method, Method::cqr);
  EXPECT_EQ(s.rows.size(), 3u);
  EXPECT_TRUE(rep.any_failure());
  EXPECT_FALSE(rep.all_failed());
  EXPECT_EQ(find(rep, Method::cqr), nullptr);
  EXPECT_NE(find(rep, Method::claps), nullptr);
}

TEST(Experiment, TooSmallDatasetIsFatalForTheSeed) {
  auto cfg = smoke_config();
  cfg.dataset.n = 3;
  cfg.split.n_train = 10;
  const auto rep = run_experiment(cfg);
  EXPECT_FALSE(rep.seeds[0].fatal_error.empty());
  EXPECT_TRUE(rep.all_failed());
}

TEST(Experiment, ConfigValidationNamesField) {
  auto cfg = smoke_config();
  cfg.lambdas = {0.0};
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    EXPECT_NE(std::string(e.what()).find("lambdas"), std::string::npos);
  }
  ExperimentConfig csv;
  try {
    csv.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("dataset.path"), std::string::npos);
  }
}

TEST(Ablation, GridReusesOneBackbonePerSeed) {
  auto cfg = smoke_config();
  cfg.dataset.n = 800;
  cfg.lambdas = {0.1, 0.3, 1.0, 3.0, 10.0};
  cfg.estimators = {llla::Sigma2Estimator::evidence, llla::Sigma2Estimator::residual};
  const auto rep = run_ablation(cfg);
  ASSERT_EQ(rep.rows.size(), 10u);
  double lo = 1.0, hi = 0.0;
  for (const auto& r : rep.rows) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_GT(r.sigma2, 0.0);
    EXPECT_GT(r.t, 0.0);
    lo = std::min(lo, r.coverage);
    hi = std::max(hi, r.coverage);
  }
  EXPECT_NEAR(rep.coverage_spread, hi - lo, 1e-15);
  EXPECT_EQ(rep.width_trend.size(), 2u);

  // the λ = 1 residual cell equals a plain run with the same settings
  auto single = cfg;
  single.lambdas = {1.0};
  single.estimators = {llla::Sigma2Estimator::residual};
  single.methods = {Method::claps};
  const auto run = run_experiment(single);
  const auto it = std::find_if(rep.rows.begin(), rep.rows.end(), [](const AblationRow& r) {
    return r.lambda == 1.0 && r.estimator == llla::Sigma2Estimator::residual;
  });
  ASSERT_NE(it, rep.rows.end());
  EXPECT_EQ(it->coverage, run.seeds[0].rows[0].coverage);
  EXPECT_EQ(it->width, run.seeds[0].rows[0].width_mean);
}

TEST(Ablation, TrendLabels) {
  const std::vector<double> up{1.0, 1.1, 1.2}, down{3.0, 2.0, 1.0}, flat{1.0, 1.001, 0.999},
      mixed{1.0, 2.0, 1.0};
  EXPECT_EQ(trend_label(up), "increasing");
  EXPECT_EQ(trend_label(down), "decreasing");
  EXPECT_EQ(trend_label(flat), "flat");
  EXPECT_EQ(trend_label(mixed), "mixed");
}
