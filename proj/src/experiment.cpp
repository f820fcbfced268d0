#include "claps/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "claps/distributions.hpp"
#include "claps/error.hpp"

namespace claps::eval {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream per (run seed, purpose).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  return splitmix64(splitmix64(seed) ^ (purpose * 0xD1B54A32D192ED03ULL));
}

enum Stream : std::uint64_t { kData = 1, kSplit = 2, kBackbone = 3, kScale = 4, kQuantile = 5, kSubsample = 6 };

bool contains(const std::vector<Method>& v, Method m) {
  return std::find(v.begin(), v.end(), m) != v.end();
}

void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ConfigInvalid, field + ": " + why);
}

struct Prepared {
  data::Split split;
  nn::TrainedBackbone point;
  linalg::DenseMatrix phi_train, phi_cal, phi_test;
  std::vector<double> y_train_c;
};

Prepared prepare(const ExperimentConfig& cfg, const data::Dataset& ds, std::uint64_t seed,
                 const data::Dataset* fixed_test) {
  data::SplitSpec sspec = cfg.split;
  sspec.seed = derive_seed(cfg.split.seed + seed, kSplit);
  Prepared p{fixed_test ? data::split_with_fixed_test(ds, *fixed_test, sspec)
                        : data::split(ds, sspec),
             {}, {}, {}, {}, {}};

  nn::MlpSpec spec = cfg.backbone;
  spec.input_dim = ds.num_features();
  spec.head = nn::HeadSpec::point();
  nn::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.train.seed + seed, kBackbone);
  p.point = nn::train(spec, p.split.train, p.split.stats, nn::Loss::mse, tc);

  p.phi_train = nn::features(p.point, p.split.train.x);
  p.phi_cal = nn::features(p.point, p.split.cal.x);
  p.phi_test = nn::features(p.point, p.split.test.x);
  p.y_train_c = p.split.stats.center(p.split.train.y);
  return p;
}

struct FittedPosterior {
  llla::LaplacePosterior post;
  bool fallback = false;
};

FittedPosterior fit_posterior(const Prepared& p, double lambda, llla::Sigma2Estimator est) {
  try {
    return {llla::fit_llla(p.phi_train, p.y_train_c, lambda, est), false};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateDof) throw;
    return {llla::fit_llla(p.phi_train, p.y_train_c, lambda, llla::Sigma2Estimator::residual),
            true};
  }
}

std::vector<llla::PredictiveGaussian> predict_all(const llla::LaplacePosterior& post,
                                                  const linalg::DenseMatrix& phi, double center) {
  std::vector<llla::PredictiveGaussian> out(phi.rows());
  for (std::size_t i = 0; i < phi.rows(); ++i) out[i] = llla::predictive(post, phi.row(i), center);
  return out;
}

struct ClapsOutcome {
  conformal::CalibrationResult cal;
  std::vector<double> cal_scores;
  std::vector<Interval> intervals;
  std::vector<llla::PredictiveGaussian> test_pred;
};

ClapsOutcome run_claps(const Prepared& p, const llla::LaplacePosterior& post, double target_cov) {
  const double c = p.split.stats.target_center;
  const auto cal_pred = predict_all(post, p.phi_cal, c);
  ClapsOutcome out;
  out.cal_scores.resize(cal_pred.size());
  for (std::size_t i = 0; i < cal_pred.size(); ++i)
    out.cal_scores[i] = conformal::centrality_score(cal_pred[i], p.split.cal.y[i]);
  out.cal = conformal::calibrate(Method::claps, out.cal_scores, target_cov);
  out.test_pred = predict_all(post, p.phi_test, c);
  out.intervals.reserve(out.test_pred.size());
  for (const auto& g : out.test_pred)
    out.intervals.push_back(conformal::claps_interval(g, out.cal.threshold));
  return out;
}

MetricsRow make_row(Method m, const std::vector<Interval>& intervals, const std::vector<double>& mu,
                    const std::vector<double>& y, const conformal::CalibrationResult& cal,
                    std::uint64_t seed) {
  MetricsRow r;
  r.method = m;
  const auto cc = coverage_count(intervals, y);
  r.covered = cc.covered;
  r.n_test = cc.n;
  r.coverage = cc.fraction();
  r.width_mean = mean_width(intervals);
  r.width_infinite = std::isinf(r.width_mean);
  r.mae = mae(mu, y);
  r.seed = seed;
  r.threshold = cal.threshold;
  r.rank_k = cal.rank_k;
  r.m_cal = cal.m;
  return r;
}

// Independent recount of interval membership.
bool recount_matches(const std::vector<Interval>& iv, const std::vector<double>& y,
                     std::size_t covered) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool above = std::isinf(iv[i].lo) ? true : y[i] >= iv[i].lo;
    const bool below = std::isinf(iv[i].hi) ? true : y[i] <= iv[i].hi;
    c += (above && below) ? 1 : 0;
  }
  return c == covered;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (run_name.empty()) invalid("run_name", "must not be empty");
  switch (dataset.kind) {
    case DatasetConfig::Kind::csv:
      if (dataset.path.empty()) invalid("dataset.path", "required for csv datasets");
      break;
    case DatasetConfig::Kind::linear_gaussian:
      if (dataset.n < 3) invalid("dataset.n", "need at least 3 rows");
      if (dataset.d == 0) invalid("dataset.d", "must be positive");
      if (!dataset.true_w.empty() && dataset.true_w.size() != dataset.d)
        invalid("dataset.true_w", "length must equal dataset.d");
      if (!(dataset.sigma >= 0.0)) invalid("dataset.sigma", "must be >= 0");
      break;
    case DatasetConfig::Kind::heteroscedastic:
      if (dataset.n < 3) invalid("dataset.n", "need at least 3 rows");
      break;
  }
  if (methods.empty()) invalid("methods", "must not be empty");
  if (seeds.empty()) invalid("seeds", "must not be empty");
  if (!(target_cov > 0.0 && target_cov < 1.0)) invalid("target_cov", "must lie in (0, 1)");
  if (lambdas.empty()) invalid("lambdas", "must not be empty");
  for (double l : lambdas)
    if (!(l > 0.0)) invalid("lambdas", "every lambda must be > 0");
  if (estimators.empty()) invalid("estimators", "must not be empty");
  if (train.batch_size == 0) invalid("train.batch_size", "must be >= 1");
  if (head_train.batch_size == 0) invalid("head_train.batch_size", "must be >= 1");
  if (!(train.learning_rate > 0.0)) invalid("train.learning_rate", "must be > 0");
  if (!(head_train.learning_rate > 0.0)) invalid("head_train.learning_rate", "must be > 0");
  if (backbone.feature_map == nn::FeatureMap::mlp && backbone.hidden_widths.empty())
    invalid("backbone.hidden_widths", "must not be empty for an mlp backbone");
  if (backbone.feature_map == nn::FeatureMap::identity && !backbone.hidden_widths.empty())
    invalid("backbone.hidden_widths", "must be empty for the identity feature map");
  if (!split.n_train) {
    for (auto [name, v] : {std::pair{"split.train_frac", split.train_frac},
                           std::pair{"split.cal_frac", split.cal_frac},
                           std::pair{"split.test_frac", split.test_frac}}) {
      if (!(v >= 0.0 && v <= 1.0)) invalid(name, "must lie in [0, 1]");
    }
  }
  if (!(conf_level > 0.0 && conf_level < 1.0)) invalid("conf_level", "must lie in (0, 1)");
  if (workers == 0) invalid("workers", "must be >= 1");
}

bool ExperimentReport::any_failure() const {
  return std::any_of(seeds.begin(), seeds.end(), [](const SeedResult& s) {
    return !s.failures.empty() || !s.fatal_error.empty();
  });
}

bool ExperimentReport::all_failed() const {
  return std::all_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.rows.empty(); });
}

data::Dataset materialize_dataset(const DatasetConfig& cfg, std::uint64_t run_seed) {
  const std::uint64_t seed = cfg.resample_per_seed ? derive_seed(cfg.seed + run_seed, kData)
                                                   : cfg.seed;
  switch (cfg.kind) {
    case DatasetConfig::Kind::csv: {
      data::CsvOptions opts{cfg.target, cfg.delimiter};
      return data::load_csv(cfg.path, opts).dataset;
    }
    case DatasetConfig::Kind::linear_gaussian: {
      auto w = cfg.true_w.empty() ? std::vector<double>(cfg.d, 1.0) : cfg.true_w;
      return data::synth_linear_gaussian(cfg.n, cfg.d, std::move(w), cfg.sigma, seed);
    }
    case DatasetConfig::Kind::heteroscedastic:
      return data::synth_heteroscedastic(cfg.n, seed, cfg.base, cfg.slope);
  }
  throw Error(ErrorCode::ConfigInvalid, "dataset.kind: unknown");
}

SeedResult run_seed(const ExperimentConfig& cfg, const data::Dataset& ds, std::uint64_t seed,
                    const data::Dataset* fixed_test) {
  SeedResult res;
  res.seed = seed;
  Prepared p;
  try {
    p = prepare(cfg, ds, seed, fixed_test);
  } catch (const std::exception& e) {
    res.fatal_error = e.what();
    return res;
  }
  res.n_train = p.split.train.size();
  res.n_cal = p.split.cal.size();
  res.n_test = p.split.test.size();
  const auto& y_cal = p.split.cal.y;
  const auto& y_test = p.split.test.y;
  const double alpha = 1.0 - cfg.target_cov;

  // Point-head predictions shared by the residual-style baselines.
  std::vector<double> mu_cal(y_cal.size()), mu_test(y_test.size());
  for (std::size_t i = 0; i < mu_cal.size(); ++i)
    mu_cal[i] = nn::head_from_features(p.point, p.phi_cal.row(i)).value;
  for (std::size_t i = 0; i < mu_test.size(); ++i)
    mu_test[i] = nn::head_from_features(p.point, p.phi_test.row(i)).value;

  auto guard = [&](Method m, auto&& body) {
    try {
      body();
      if (contains(cfg.inject_failure, m)) {
        res.rows.erase(std::remove_if(res.rows.begin(), res.rows.end(),
                                      [m](const MetricsRow& r) { return r.method == m; }),
                       res.rows.end());
        throw Error(ErrorCode::InjectedFailure, "configured to fail");
      }
    } catch (const std::exception& e) {
      res.failures.push_back({m, e.what()});
    }
  };

  for (Method m : cfg.methods) {
    switch (m) {
      case Method::claps:
        guard(m, [&] {
          auto fitted = fit_posterior(p, cfg.lambdas.front(), cfg.estimators.front());
          const auto& post = fitted.post;
          auto out = run_claps(p, post, cfg.target_cov);
          std::vector<double> mu(out.test_pred.size());
          res.test_v.resize(out.test_pred.size());
          for (std::size_t i = 0; i < mu.size(); ++i) {
            mu[i] = out.test_pred[i].mu;
            res.test_v[i] = out.test_pred[i].v;
          }
          res.claps_t = out.cal.threshold;
          MetricsRow row = make_row(m, out.intervals, mu, y_test, out.cal, seed);
          res.audit.coverage_recount_ok =
              res.audit.coverage_recount_ok && recount_matches(out.intervals, y_test, row.covered);
          if (!row.width_infinite) {
            const double zq = dist::normal_quantile(1.0 - out.cal.threshold);
            double s = 0.0;
            for (double v : res.test_v) s += 2.0 * std::sqrt(v) * zq;
            const double closed = s / static_cast<double>(res.test_v.size());
            res.audit.claps_width_max_abs_diff = std::abs(closed - row.width_mean);
            res.audit.claps_width_ok =
                res.audit.claps_width_max_abs_diff <= 1e-9 * std::max(1.0, std::abs(closed));
          }
          res.rows.push_back(row);

          // Diagnostics on the same posterior.
          SeedDiagnostics dg;
          dg.lambda = post.lambda;
          dg.estimator = post.sigma2_estimator;
          dg.estimator_fallback = fitted.fallback;
          dg.backbone_initial_loss = p.point.initial_loss;
          dg.backbone_final_loss = p.point.final_loss;
          const auto dec_cal = diag::decompose(post, p.phi_cal, diag::SplitKind::calibration);
          std::vector<double> test_epi(out.test_pred.size());
          for (std::size_t i = 0; i < test_epi.size(); ++i) test_epi[i] = out.test_pred[i].epi;
          const auto dec_test = diag::decompose_epi(std::move(test_epi), post.sigma2,
                                                    dec_cal.summary.trace_sigma,
                                                    diag::SplitKind::test);
          dg.calibration = dec_cal.summary;
          dg.test = dec_test.summary;

          auto signal = [&](const linalg::DenseMatrix& phi, const std::vector<double>& y) {
            std::vector<double> err(y.size()), scale(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) {
              const auto g = llla::predictive(post, phi.row(i), p.split.stats.target_center);
              err[i] = std::abs(y[i] - g.mu);
              scale[i] = std::sqrt(g.v);
            }
            return diag::spearman(err, scale);
          };
          if (y_cal.size() >= 3) dg.spearman_calibration = signal(p.phi_cal, y_cal);
          if (y_test.size() >= 3) dg.spearman_test = signal(p.phi_test, y_test);
          dg.verdict = diag::select_method(dg.calibration, dg.spearman_calibration, cfg.thresholds);
          if (cfg.subsample) {
            const auto grid = diag::default_subsample_grid(res.n_train, cfg.subsample_points);
            dg.subsample = diag::subsample_curves(p.phi_train, p.y_train_c,
                                                  {post.lambda, post.sigma2_estimator}, grid,
                                                  p.phi_test, derive_seed(seed, kSubsample));
          }
          res.diagnostics = std::move(dg);
          if (cfg.save_models) {
            res.model = ModelArtifacts{p.point, post, out.cal_scores, p.split.cal};
          }
        });
        break;

      case Method::baseline_cp:
        guard(m, [&] {
          std::vector<double> scores(y_cal.size());
          for (std::size_t i = 0; i < scores.size(); ++i)
            scores[i] = conformal::abs_residual_score(mu_cal[i], y_cal[i]);
          const auto cal = conformal::calibrate(m, scores, cfg.target_cov);
          std::vector<Interval> iv;
          iv.reserve(mu_test.size());
          for (double mu : mu_test) iv.push_back(conformal::residual_interval(mu, cal.threshold));
          auto row = make_row(m, iv, mu_test, y_test, cal, seed);
          res.audit.coverage_recount_ok =
              res.audit.coverage_recount_ok && recount_matches(iv, y_test, row.covered);
          res.rows.push_back(row);
        });
        break;

      case Method::norm_cp:
        guard(m, [&] {
          nn::TrainConfig tc = cfg.head_train;
          tc.seed = derive_seed(cfg.head_train.seed + seed, kScale);
          const auto scale_model =
              nn::train_head(p.point, nn::HeadSpec::scale(), p.split.train, nn::Loss::scale_abs, tc);
          auto h = [&](std::span<const double> phi) {
            return std::max(nn::head_from_features(scale_model, phi).value, conformal::kScaleFloor);
          };
          std::vector<double> scores(y_cal.size());
          for (std::size_t i = 0; i < scores.size(); ++i)
            scores[i] = conformal::normalized_score(mu_cal[i], h(p.phi_cal.row(i)), y_cal[i]);
          const auto cal = conformal::calibrate(m, scores, cfg.target_cov);
          std::vector<Interval> iv;
          iv.reserve(mu_test.size());
          for (std::size_t i = 0; i < mu_test.size(); ++i)
            iv.push_back(conformal::normcp_interval(mu_test[i], h(p.phi_test.row(i)), cal.threshold));
          auto row = make_row(m, iv, mu_test, y_test, cal, seed);
          res.audit.coverage_recount_ok =
              res.audit.coverage_recount_ok && recount_matches(iv, y_test, row.covered);
          res.rows.push_back(row);
        });
        break;

      case Method::cqr:
        guard(m, [&] {
          nn::TrainConfig tc = cfg.head_train;
          tc.seed = derive_seed(cfg.head_train.seed + seed, kQuantile);
          const auto qmodel = nn::train_head(p.point,
                                             nn::HeadSpec::quantile_pair(alpha / 2, 1 - alpha / 2),
                                             p.split.train, nn::Loss::pinball_pair, tc);
          std::vector<double> scores(y_cal.size());
          for (std::size_t i = 0; i < scores.size(); ++i) {
            const auto q = nn::head_from_features(qmodel, p.phi_cal.row(i));
            scores[i] = conformal::cqr_score(q.lo, q.hi, y_cal[i]);
          }
          const auto cal = conformal::calibrate(m, scores, cfg.target_cov);
          std::vector<Interval> iv;
          std::vector<double> mid;
          std::size_t clamped = 0;
          for (std::size_t i = 0; i < mu_test.size(); ++i) {
            const auto q = nn::head_from_features(qmodel, p.phi_test.row(i));
            auto r = conformal::cqr_interval_checked(q.lo, q.hi, cal.threshold);
            clamped += r.clamped ? 1 : 0;
            iv.push_back(r.interval);
            mid.push_back(0.5 * (q.lo + q.hi));
          }
          auto row = make_row(m, iv, mid, y_test, cal, seed);
          row.cqr_clamped = clamped;
          res.audit.coverage_recount_ok =
              res.audit.coverage_recount_ok && recount_matches(iv, y_test, row.covered);
          res.rows.push_back(row);
        });
        break;
    }
  }
  return res;
}

namespace {

template <typename Fn>
void for_each_seed(const ExperimentConfig& cfg, Fn&& fn) {
  const std::size_t n = cfg.seeds.size();
  const std::size_t cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t workers = std::min({cfg.workers, n, cap});
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t next = 0;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n) return;
          i = next++;
        }
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

struct LoadedData {
  std::optional<data::Dataset> shared;
  std::optional<data::Dataset> fixed_test;
};

LoadedData load_shared(const ExperimentConfig& cfg) {
  LoadedData out;
  if (cfg.dataset.kind == DatasetConfig::Kind::csv) {
    out.shared = materialize_dataset(cfg.dataset, 0);
    if (!cfg.dataset.test_path.empty()) {
      data::CsvOptions opts{cfg.dataset.target, cfg.dataset.delimiter};
      out.fixed_test = data::load_csv(cfg.dataset.test_path, opts).dataset;
    }
  } else if (!cfg.dataset.resample_per_seed) {
    out.shared = materialize_dataset(cfg.dataset, 0);
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;
  const auto loaded = load_shared(cfg);

  report.seeds.resize(cfg.seeds.size());
  for_each_seed(cfg, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    try {
      if (loaded.shared) {
        report.seeds[i] = run_seed(cfg, *loaded.shared, seed,
                                   loaded.fixed_test ? &*loaded.fixed_test : nullptr);
      } else {
        report.seeds[i] = run_seed(cfg, materialize_dataset(cfg.dataset, seed), seed);
      }
    } catch (const std::exception& e) {
      report.seeds[i].seed = seed;
      report.seeds[i].fatal_error = e.what();
    }
  });

  for (Method m : cfg.methods) {
    std::vector<MetricsRow> rows;
    for (const auto& s : report.seeds)
      for (const auto& r : s.rows)
        if (r.method == m) rows.push_back(r);
    if (!rows.empty()) report.aggregates.push_back(aggregate(rows, cfg.conf_level));
  }
  return report;
}

std::string trend_label(std::span<const double> values, double tol) {
  bool up = false, down = false;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double scale = std::max(std::abs(values[i - 1]), 1e-300);
    const double rel = (values[i] - values[i - 1]) / scale;
    if (rel > tol) up = true;
    if (rel < -tol) down = true;
  }
  if (up && down) return "mixed";
  if (up) return "increasing";
  if (down) return "decreasing";
  return "flat";
}

AblationReport run_ablation(const ExperimentConfig& cfg) {
  cfg.validate();
  AblationReport report;
  report.config = cfg;
  const auto loaded = load_shared(cfg);
  const std::size_t cells = cfg.lambdas.size() * cfg.estimators.size();
  std::vector<std::vector<AblationRow>> per_seed(cfg.seeds.size());

  for_each_seed(cfg, [&](std::size_t si) {
    const std::uint64_t seed = cfg.seeds[si];
    auto& rows = per_seed[si];
    Prepared p;
    try {
      const data::Dataset ds =
          loaded.shared ? *loaded.shared : materialize_dataset(cfg.dataset, seed);
      p = prepare(cfg, ds, seed, loaded.fixed_test ? &*loaded.fixed_test : nullptr);
    } catch (const std::exception& e) {
      for (double lambda : cfg.lambdas)
        for (auto est : cfg.estimators) rows.push_back({seed, lambda, est, 0, 0, 0, 0, e.what()});
      return;
    }
    rows.reserve(cells);
    for (double lambda : cfg.lambdas) {
      for (auto est : cfg.estimators) {
        AblationRow row{seed, lambda, est, 0, 0, 0, 0, {}};
        try {
          const auto post = llla::fit_llla(p.phi_train, p.y_train_c, lambda, est);
          const auto out = run_claps(p, post, cfg.target_cov);
          row.coverage = coverage(out.intervals, p.split.test.y);
          row.width = mean_width(out.intervals);
          row.t = out.cal.threshold;
          row.sigma2 = post.sigma2;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        rows.push_back(row);
      }
    }
  });

  for (auto& rows : per_seed) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : rows) {
      if (!r.error.empty()) continue;
      lo = std::min(lo, r.coverage);
      hi = std::max(hi, r.coverage);
    }
    if (hi >= lo) report.coverage_spread = std::max(report.coverage_spread, hi - lo);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }

  // Width trend vs λ per estimator, averaged over seeds.
  std::vector<double> sorted_lambdas = cfg.lambdas;
  std::sort(sorted_lambdas.begin(), sorted_lambdas.end());
  for (auto est : cfg.estimators) {
    std::vector<double> widths;
    for (double lambda : sorted_lambdas) {
      double s = 0.0;
      std::size_t c = 0;
      for (const auto& r : report.rows) {
        if (r.estimator == est && r.lambda == lambda && r.error.empty()) {
          s += r.width;
          ++c;
        }
      }
      if (c > 0) widths.push_back(s / static_cast<double>(c));
    }
    report.width_trend.emplace_back(est, trend_label(widths));
  }
  return report;
}

}  // namespace claps::eval
