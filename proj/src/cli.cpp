#include "claps/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "claps/checkpoint.hpp"
#include "claps/conformal.hpp"
#include "claps/data.hpp"
#include "claps/diagnostics.hpp"
#include "claps/error.hpp"
#include "claps/experiment.hpp"
#include "claps/report.hpp"

namespace claps::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  auto log = spdlog::get("claps");
  if (!log) {
    log = spdlog::stderr_logger_st("claps");
    log->set_pattern("[%l] %v");
  }
  return log;
}

fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "runs";
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "config: cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config: ") + e.what());
  }
}

void emit(std::ostream& out, const json& summary) { out << summary.dump() << std::endl; }

struct CommonRunFlags {
  std::string config;
  std::string out;
  std::string run_name;
  std::vector<std::uint64_t> seeds;
  std::optional<double> target_cov;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonRunFlags& f) {
  cmd->add_option("-c,--config", f.config, "experiment config (JSON)")->required();
  cmd->add_option("-o,--out", f.out, "output directory (overrides config and $CLAPS_OUTPUT_DIR)");
  cmd->add_option("--run-name", f.run_name, "run name (subdirectory of the output directory)");
  cmd->add_option("--seeds", f.seeds, "run seeds");
  cmd->add_option("--target-cov", f.target_cov, "target coverage 1 - alpha");
  cmd->add_option("--workers", f.workers,
                  "seed-level worker threads (capped at the seed count and hardware threads)");
}

/// Resolves config + flag overrides. Returns the config and the run directory.
std::pair<eval::ExperimentConfig, fs::path> resolve(const CommonRunFlags& f, const json& raw,
                                                    eval::ExperimentConfig cfg) {
  if (!f.run_name.empty()) cfg.run_name = f.run_name;
  if (!f.seeds.empty()) cfg.seeds = f.seeds;
  if (f.target_cov) cfg.target_cov = *f.target_cov;
  if (f.workers) cfg.workers = *f.workers;
  if (!f.out.empty()) {
    cfg.output_dir = f.out;
  } else if (!raw.contains("output_dir")) {
    cfg.output_dir = default_output_dir();
  }
  cfg.validate();
  return {cfg, cfg.output_dir / cfg.run_name};
}

json aggregates_summary(const eval::ExperimentReport& r) {
  json out = json::object();
  for (const auto& a : r.aggregates) {
    out[std::string(conformal::to_string(a.method))] = {
        {"coverage", report::number(a.coverage_mean)}, {"width", report::number(a.width_mean)}};
  }
  return out;
}

int cmd_run(const CommonRunFlags& f, const std::optional<double>& lambda,
            const std::string& estimator, bool subsample,
            const std::vector<std::string>& inject, std::ostream& out) {
  const json raw = read_json_file(f.config);
  auto cfg = report::config_from_json(raw);
  if (lambda) cfg.lambdas = {*lambda};
  if (!estimator.empty()) cfg.estimators = {llla::sigma2_estimator_from_string(estimator)};
  if (subsample) cfg.subsample = true;
  for (const auto& m : inject) cfg.inject_failure.push_back(conformal::method_from_string(m));
  fs::path run_dir;
  std::tie(cfg, run_dir) = resolve(f, raw, cfg);

  logger()->info("run '{}': {} seed(s), target coverage {}", cfg.run_name, cfg.seeds.size(),
                 cfg.target_cov);
  const auto rep = eval::run_experiment(cfg);
  for (const auto& s : rep.seeds) {
    if (!s.fatal_error.empty()) logger()->error("seed {}: {}", s.seed, s.fatal_error);
    for (const auto& fl : s.failures) {
      logger()->warn("seed {} {}: {}", s.seed, conformal::to_string(fl.method), fl.message);
    }
  }
  report::write_run_outputs(rep, run_dir);
  logger()->info("wrote {}", run_dir.string());

  const int code = rep.all_failed() ? kExitFatal : rep.any_failure() ? kExitPartial : kExitOk;
  emit(out, {{"command", "run"},
             {"status", code == kExitOk ? "ok" : code == kExitPartial ? "partial" : "failed"},
             {"exit_code", code},
             {"run_dir", run_dir.string()},
             {"seeds", rep.seeds.size()},
             {"aggregates", aggregates_summary(rep)}});
  return code;
}

int cmd_ablate(const CommonRunFlags& f, const std::vector<double>& lambdas,
               const std::vector<std::string>& estimators, std::ostream& out) {
  const json raw = read_json_file(f.config);
  auto cfg = report::config_from_json(raw);
  // Unless overridden, sweep the full grid on a single representative seed.
  if (!lambdas.empty()) cfg.lambdas = lambdas;
  else if (!raw.contains("lambdas")) cfg.lambdas = {0.1, 0.3, 1.0, 3.0, 10.0};
  if (!estimators.empty()) {
    cfg.estimators.clear();
    for (const auto& e : estimators) cfg.estimators.push_back(llla::sigma2_estimator_from_string(e));
  } else if (!raw.contains("estimators")) {
    cfg.estimators = {llla::Sigma2Estimator::evidence, llla::Sigma2Estimator::residual};
  }
  if (f.seeds.empty() && !raw.contains("seeds")) cfg.seeds = {cfg.seeds.front()};
  fs::path run_dir;
  std::tie(cfg, run_dir) = resolve(f, raw, cfg);

  logger()->info("ablate '{}': {} lambda(s) x {} estimator(s) x {} seed(s)", cfg.run_name,
                 cfg.lambdas.size(), cfg.estimators.size(), cfg.seeds.size());
  const auto rep = eval::run_ablation(cfg);
  report::write_ablation_outputs(rep, run_dir);

  std::size_t failed = 0;
  for (const auto& row : rep.rows) {
    if (!row.error.empty()) {
      ++failed;
      logger()->warn("seed {} lambda {} {}: {}", row.seed, row.lambda,
                     llla::to_string(row.estimator), row.error);
    }
  }
  const int code = rep.rows.empty() || failed == rep.rows.size() ? kExitFatal
                   : failed > 0                                   ? kExitPartial
                                                                  : kExitOk;
  emit(out, {{"command", "ablate"},
             {"status", code == kExitOk ? "ok" : code == kExitPartial ? "partial" : "failed"},
             {"exit_code", code},
             {"run_dir", run_dir.string()},
             {"rows", rep.rows.size()},
             {"coverage_spread", report::number(rep.coverage_spread)}});
  return code;
}

struct Scored {
  std::vector<llla::PredictiveGaussian> preds;
  data::Dataset data;
};

Scored predict_file(const checkpoint::ModelBundle& bundle, const fs::path& path,
                    const data::CsvOptions& opts) {
  auto loaded = data::load_csv(path, opts);
  if (loaded.dropped_rows > 0) {
    logger()->warn("{}: dropped {} non-numeric row(s)", path.string(), loaded.dropped_rows);
  }
  Scored s{{}, std::move(loaded.dataset)};
  if (s.data.size() == 0) throw Error(ErrorCode::EmptySplit, path.string() + " has no rows");
  if (s.data.num_features() != bundle.backbone.spec.input_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                path.string() + " has " + std::to_string(s.data.num_features()) +
                    " feature column(s), model expects " +
                    std::to_string(bundle.backbone.spec.input_dim));
  }
  const auto phi = nn::features(bundle.backbone, s.data.x);
  s.preds.reserve(s.data.size());
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    s.preds.push_back(
        llla::predictive(bundle.posterior, phi.row(i), bundle.backbone.stats.target_center));
  }
  return s;
}

/// Uses `target` as the label column when the header has it; otherwise every
/// column is a feature.
data::CsvOptions options_for(const fs::path& path, const std::string& target, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::string header;
  std::getline(in, header);
  std::stringstream ss(header);
  std::string cell;
  bool has_target = false;
  while (std::getline(ss, cell, delimiter)) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    if (b != std::string::npos && cell.substr(b, e - b + 1) == target) has_target = true;
  }
  data::CsvOptions opts;
  opts.delimiter = delimiter;
  if (has_target) opts.target = target;
  else opts.features_only = true;
  return opts;
}

int cmd_diagnose(const std::string& model_dir, const std::string& data_path,
                 const std::string& target, const std::string& split_name, std::string out_path,
                 std::ostream& out) {
  const auto bundle = checkpoint::load_model_dir(model_dir);
  data::CsvOptions opts;
  opts.target = target;
  const auto scored = predict_file(bundle, data_path, opts);

  diag::SplitKind split;
  if (split_name == "calibration" || split_name == "cal") split = diag::SplitKind::calibration;
  else if (split_name == "test") split = diag::SplitKind::test;
  else throw Error(ErrorCode::ConfigInvalid, "split: expected calibration or test");

  std::vector<double> epi, abs_err, scale;
  for (std::size_t i = 0; i < scored.preds.size(); ++i) {
    epi.push_back(scored.preds[i].epi);
    abs_err.push_back(std::abs(scored.data.y[i] - scored.preds[i].mu));
    scale.push_back(std::sqrt(scored.preds[i].v));
  }
  const auto dec = diag::decompose_epi(std::move(epi), bundle.posterior.sigma2,
                                       llla::trace_sigma(bundle.posterior), split);
  const auto sp = diag::spearman(abs_err, scale);
  const auto verdict = diag::select_method(dec.summary, sp);

  const json result = {{"format", "claps-diagnostics/1"},
                       {"n", scored.data.size()},
                       {"decomposition", report::decomposition_to_json(dec.summary)},
                       {"spearman", report::spearman_to_json(sp)},
                       {"selection", report::verdict_to_json(verdict)}};
  if (out_path.empty()) out_path = (default_output_dir() / "diagnostics.json").string();
  const fs::path target_path(out_path);
  if (target_path.has_parent_path()) fs::create_directories(target_path.parent_path());
  report::write_text(target_path, result.dump(2) + "\n");
  logger()->info("wrote {}", out_path);

  emit(out, {{"command", "diagnose"},
             {"status", "ok"},
             {"exit_code", kExitOk},
             {"path", out_path},
             {"n", scored.data.size()},
             {"choice", std::string(diag::to_string(verdict.choice))}});
  return kExitOk;
}

int cmd_synth(const std::string& kind, std::size_t n, std::size_t d, double sigma, std::uint64_t seed,
              double a, double b, const std::string& out_path, std::ostream& out) {
  if (n == 0) throw Error(ErrorCode::ConfigInvalid, "n: must be >= 1");
  data::Dataset ds;
  if (kind == "linear_gaussian") {
    if (d == 0) throw Error(ErrorCode::ConfigInvalid, "d: must be >= 1");
    ds = data::synth_linear_gaussian(n, d, std::vector<double>(d, 1.0), sigma, seed);
  } else if (kind == "heteroscedastic") {
    ds = data::synth_heteroscedastic(n, seed, a, b);
  } else {
    throw Error(ErrorCode::ConfigInvalid, "kind: expected linear_gaussian or heteroscedastic");
  }
  const fs::path path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::write_csv(ds, path);
  logger()->info("wrote {} rows to {}", ds.size(), out_path);
  emit(out, {{"command", "synth"},
             {"status", "ok"},
             {"exit_code", kExitOk},
             {"path", out_path},
             {"rows", ds.size()},
             {"features", ds.num_features()}});
  return kExitOk;
}

int cmd_score(const std::string& model_dir, const std::string& input, const std::string& target,
              std::optional<double> target_cov, std::string out_path, std::ostream& out) {
  const auto bundle = checkpoint::load_model_dir(model_dir);
  const double cov = target_cov.value_or(bundle.target_cov);
  if (!(cov > 0.0 && cov < 1.0)) throw Error(ErrorCode::ConfigInvalid, "target_cov: must lie in (0, 1)");
  const auto scored = predict_file(bundle, input, options_for(input, target, ','));
  const auto rank = conformal::rank_threshold_lower(bundle.calibration_scores, cov);

  if (out_path.empty()) out_path = (default_output_dir() / "scores.csv").string();
  const fs::path path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream csv;
  csv << "lo,hi,mu,v,epi\n";
  std::size_t covered = 0, labelled = 0;
  for (std::size_t i = 0; i < scored.preds.size(); ++i) {
    const auto& p = scored.preds[i];
    const auto iv = conformal::claps_interval(p, rank.value);
    csv << report::format_double(iv.lo) << ',' << report::format_double(iv.hi) << ','
        << report::format_double(p.mu) << ',' << report::format_double(p.v) << ','
        << report::format_double(p.epi) << '\n';
    if (!std::isnan(scored.data.y[i])) {
      ++labelled;
      if (iv.contains(scored.data.y[i])) ++covered;
    }
  }
  report::write_text(path, csv.str());
  logger()->info("scored {} row(s) into {}", scored.preds.size(), out_path);

  json summary = {{"command", "score"},
                  {"status", "ok"},
                  {"exit_code", kExitOk},
                  {"path", out_path},
                  {"rows", scored.preds.size()},
                  {"target_cov", cov},
                  {"t", report::number(rank.value)}};
  if (labelled > 0) {
    summary["coverage"] = static_cast<double>(covered) / static_cast<double>(labelled);
  }
  emit(out, summary);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"CLAPS: posterior-aware split-conformal regression"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  CommonRunFlags run_flags;
  std::optional<double> run_lambda;
  std::string run_estimator;
  bool run_subsample = false;
  std::vector<std::string> run_inject;
  auto* run_cmd = app.add_subcommand("run", "train, calibrate and evaluate every configured method");
  add_common(run_cmd, run_flags);
  run_cmd->add_option("--lambda", run_lambda, "Laplace prior precision");
  run_cmd->add_option("--estimator", run_estimator, "noise estimator: residual or evidence");
  run_cmd->add_flag("--subsample", run_subsample, "also compute subsample contraction curves");
  run_cmd->add_option("--inject-failure", run_inject, "force these methods to fail (testing aid)");

  CommonRunFlags ab_flags;
  std::vector<double> ab_lambdas;
  std::vector<std::string> ab_estimators;
  auto* ab_cmd = app.add_subcommand("ablate", "sweep lambda x noise estimator for CLAPS");
  add_common(ab_cmd, ab_flags);
  ab_cmd->add_option("--lambdas", ab_lambdas, "prior precisions (default 0.1 0.3 1 3 10)");
  ab_cmd->add_option("--estimators", ab_estimators, "noise estimators (default evidence residual)");

  std::string dg_model, dg_data, dg_target = "y", dg_split = "calibration", dg_out;
  auto* dg_cmd = app.add_subcommand("diagnose", "variance decomposition and selection rule for a saved model");
  dg_cmd->add_option("-m,--model", dg_model, "model directory")->required();
  dg_cmd->add_option("-d,--data", dg_data, "labelled CSV")->required();
  dg_cmd->add_option("--target", dg_target, "target column name");
  dg_cmd->add_option("--split", dg_split, "split label: calibration or test");
  dg_cmd->add_option("-o,--out", dg_out, "output JSON path");

  std::string sy_kind = "linear_gaussian", sy_out;
  std::size_t sy_n = 1000, sy_d = 8;
  double sy_sigma = 1.0, sy_a = 0.1, sy_b = 0.5;
  std::uint64_t sy_seed = 0;
  auto* sy_cmd = app.add_subcommand("synth", "write a synthetic dataset as CSV");
  sy_cmd->add_option("--kind", sy_kind, "linear_gaussian or heteroscedastic");
  sy_cmd->add_option("-n,--n", sy_n, "rows");
  sy_cmd->add_option("-d,--d", sy_d, "features (linear_gaussian)");
  sy_cmd->add_option("--sigma", sy_sigma, "noise sd (linear_gaussian)");
  sy_cmd->add_option("--seed", sy_seed, "generator seed");
  sy_cmd->add_option("-a,--a", sy_a, "noise base (heteroscedastic)");
  sy_cmd->add_option("-b,--b", sy_b, "noise slope (heteroscedastic)");
  sy_cmd->add_option("-o,--out", sy_out, "output CSV path")->required();

  std::string sc_model, sc_input, sc_target = "y", sc_out;
  std::optional<double> sc_cov;
  auto* sc_cmd = app.add_subcommand("score", "CLAPS intervals for new inputs from a saved model");
  sc_cmd->add_option("-m,--model", sc_model, "model directory")->required();
  sc_cmd->add_option("-i,--input", sc_input, "input CSV (a target column is optional)")->required();
  sc_cmd->add_option("--target", sc_target, "target column name, if present");
  sc_cmd->add_option("--target-cov", sc_cov, "target coverage (default: the saved value)");
  sc_cmd->add_option("-o,--out", sc_out, "output CSV path");

  std::vector<std::string> argv_store{"claps"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, std::cerr);
    return code == 0 ? kExitOk : kExitFatal;
  }

  auto log = logger();
  log->set_level(quiet ? spdlog::level::warn : verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run_cmd) return cmd_run(run_flags, run_lambda, run_estimator, run_subsample, run_inject, out);
    if (*ab_cmd) return cmd_ablate(ab_flags, ab_lambdas, ab_estimators, out);
    if (*dg_cmd) return cmd_diagnose(dg_model, dg_data, dg_target, dg_split, dg_out, out);
    if (*sy_cmd) return cmd_synth(sy_kind, sy_n, sy_d, sy_sigma, sy_seed, sy_a, sy_b, sy_out, out);
    if (*sc_cmd) return cmd_score(sc_model, sc_input, sc_target, sc_cov, sc_out, out);
  } catch (const Error& e) {
    log->error("{}", e.what());
    emit(out, {{"status", "failed"}, {"exit_code", kExitFatal}, {"error", e.what()},
               {"code", std::string(to_string(e.code()))}});
    return kExitFatal;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    emit(out, {{"status", "failed"}, {"exit_code", kExitFatal}, {"error", e.what()}});
    return kExitFatal;
  }
  return kExitFatal;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout);
}

}  // namespace claps::cli
