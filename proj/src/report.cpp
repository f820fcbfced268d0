#include "claps/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "claps/checkpoint.hpp"
#include "claps/error.hpp"

namespace claps::report {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double to_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::ConfigInvalid, "expected a number, got " + j.dump());
}

namespace {

using eval::DatasetConfig;
using eval::ExperimentConfig;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ConfigInvalid, field + ": " + why);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(path.empty() ? "config" : path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) bad(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
  if (!obj.contains(key)) return;
  const std::string field = path.empty() ? key : path + "." + key;
  try {
    if constexpr (std::is_same_v<T, double>) {
      out = to_double(obj.at(key));
    } else {
      out = obj.at(key).get<T>();
    }
  } catch (const json::exception& e) {
    bad(field, e.what());
  } catch (const Error&) {
    bad(field, "expected a number");
  }
}

json train_to_json(const nn::TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"optimizer", "adam"},
          {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}},
          {"seed", t.seed},
          {"shuffle", t.shuffle}};
}

nn::TrainConfig train_from_json(const json& j, const std::string& path, nn::TrainConfig t) {
  check_keys(j, path, {"epochs", "batch_size", "learning_rate", "optimizer", "adam", "seed", "shuffle"});
  read(j, "epochs", path, t.epochs);
  read(j, "batch_size", path, t.batch_size);
  read(j, "learning_rate", path, t.learning_rate);
  if (j.contains("optimizer") && j.at("optimizer") != "adam") bad(path + ".optimizer", "only adam is supported");
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    check_keys(a, path + ".adam", {"beta1", "beta2", "eps"});
    read(a, "beta1", path + ".adam", t.adam.beta1);
    read(a, "beta2", path + ".adam", t.adam.beta2);
    read(a, "eps", path + ".adam", t.adam.eps);
  }
  read(j, "seed", path, t.seed);
  read(j, "shuffle", path, t.shuffle);
  return t;
}

const char* kind_name(DatasetConfig::Kind k) {
  switch (k) {
    case DatasetConfig::Kind::csv: return "csv";
    case DatasetConfig::Kind::linear_gaussian: return "linear_gaussian";
    case DatasetConfig::Kind::heteroscedastic: return "heteroscedastic";
  }
  return "csv";
}

json methods_json(const std::vector<eval::Method>& ms) {
  json a = json::array();
  for (auto m : ms) a.push_back(std::string(conformal::to_string(m)));
  return a;
}

std::vector<eval::Method> methods_from(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array of method names");
  std::vector<eval::Method> out;
  for (const auto& e : j) {
    if (!e.is_string()) bad(field, "expected method names");
    try {
      out.push_back(conformal::method_from_string(e.get<std::string>()));
    } catch (const Error& err) {
      bad(field, err.what());
    }
  }
  return out;
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  json ds = {{"kind", kind_name(c.dataset.kind)}};
  switch (c.dataset.kind) {
    case DatasetConfig::Kind::csv:
      ds["path"] = c.dataset.path.string();
      ds["test_path"] = c.dataset.test_path.string();
      if (const auto* name = std::get_if<std::string>(&c.dataset.target)) {
        ds["target"] = *name;
      } else {
        ds["target"] = std::get<std::size_t>(c.dataset.target);
      }
      ds["delimiter"] = std::string(1, c.dataset.delimiter);
      break;
    case DatasetConfig::Kind::linear_gaussian:
      ds["n"] = c.dataset.n;
      ds["d"] = c.dataset.d;
      ds["sigma"] = c.dataset.sigma;
      ds["true_w"] = c.dataset.true_w;
      ds["seed"] = c.dataset.seed;
      ds["resample_per_seed"] = c.dataset.resample_per_seed;
      break;
    case DatasetConfig::Kind::heteroscedastic:
      ds["n"] = c.dataset.n;
      ds["base"] = c.dataset.base;
      ds["slope"] = c.dataset.slope;
      ds["seed"] = c.dataset.seed;
      ds["resample_per_seed"] = c.dataset.resample_per_seed;
      break;
  }
  json split = {{"train_frac", c.split.train_frac},
                {"cal_frac", c.split.cal_frac},
                {"test_frac", c.split.test_frac},
                {"seed", c.split.seed}};
  if (c.split.n_train) split["n_train"] = *c.split.n_train;
  if (c.split.n_cal) split["n_cal"] = *c.split.n_cal;
  if (c.split.n_test) split["n_test"] = *c.split.n_test;

  json estimators = json::array();
  for (auto e : c.estimators) estimators.push_back(std::string(llla::to_string(e)));

  return {
      {"run_name", c.run_name},
      {"dataset", ds},
      {"split", split},
      {"backbone",
       {{"hidden_widths", c.backbone.hidden_widths},
        {"activation", "relu"},
        {"feature_map", c.backbone.feature_map == nn::FeatureMap::mlp ? "mlp" : "identity"}}},
      {"train", train_to_json(c.train)},
      {"head_train", train_to_json(c.head_train)},
      {"methods", methods_json(c.methods)},
      {"target_cov", c.target_cov},
      {"lambdas", c.lambdas},
      {"estimators", estimators},
      {"seeds", c.seeds},
      {"thresholds",
       {{"eps_r", c.thresholds.eps_r},
        {"eps_trace", c.thresholds.eps_trace},
        {"tau_rho", c.thresholds.tau_rho}}},
      {"subsample", c.subsample},
      {"subsample_points", c.subsample_points},
      {"workers", c.workers},
      {"conf_level", c.conf_level},
      {"inject_failure", methods_json(c.inject_failure)},
      {"output_dir", c.output_dir.string()},
      {"save_models", c.save_models},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, "", {"run_name", "dataset", "split", "backbone", "train", "head_train", "methods",
                     "target_cov", "lambdas", "estimators", "seeds", "thresholds", "subsample",
                     "subsample_points", "workers", "conf_level", "inject_failure", "output_dir",
                     "save_models"});
  read(j, "run_name", "", c.run_name);

  if (!j.contains("dataset")) bad("dataset", "required");
  {
    const auto& d = j.at("dataset");
    check_keys(d, "dataset", {"kind", "path", "test_path", "target", "delimiter", "n", "d", "sigma",
                              "true_w", "base", "slope", "seed", "resample_per_seed"});
    std::string kind = "csv";
    read(d, "kind", "dataset", kind);
    if (kind == "csv") c.dataset.kind = DatasetConfig::Kind::csv;
    else if (kind == "linear_gaussian") c.dataset.kind = DatasetConfig::Kind::linear_gaussian;
    else if (kind == "heteroscedastic") c.dataset.kind = DatasetConfig::Kind::heteroscedastic;
    else bad("dataset.kind", "unknown kind '" + kind + "'");
    std::string path, test_path;
    read(d, "path", "dataset", path);
    read(d, "test_path", "dataset", test_path);
    c.dataset.path = path;
    c.dataset.test_path = test_path;
    if (d.contains("target")) {
      const auto& t = d.at("target");
      if (t.is_string()) c.dataset.target = t.get<std::string>();
      else if (t.is_number_unsigned()) c.dataset.target = t.get<std::size_t>();
      else bad("dataset.target", "expected a column name or zero-based index");
    }
    if (d.contains("delimiter")) {
      std::string delim;
      read(d, "delimiter", "dataset", delim);
      if (delim.size() != 1) bad("dataset.delimiter", "expected a single character");
      c.dataset.delimiter = delim[0];
    }
    read(d, "n", "dataset", c.dataset.n);
    read(d, "d", "dataset", c.dataset.d);
    read(d, "sigma", "dataset", c.dataset.sigma);
    read(d, "true_w", "dataset", c.dataset.true_w);
    read(d, "base", "dataset", c.dataset.base);
    read(d, "slope", "dataset", c.dataset.slope);
    read(d, "seed", "dataset", c.dataset.seed);
    read(d, "resample_per_seed", "dataset", c.dataset.resample_per_seed);
  }

  if (j.contains("split")) {
    const auto& s = j.at("split");
    check_keys(s, "split", {"train_frac", "cal_frac", "test_frac", "seed", "n_train", "n_cal", "n_test"});
    read(s, "train_frac", "split", c.split.train_frac);
    read(s, "cal_frac", "split", c.split.cal_frac);
    read(s, "test_frac", "split", c.split.test_frac);
    read(s, "seed", "split", c.split.seed);
    for (auto [key, slot] : {std::pair{"n_train", &c.split.n_train}, std::pair{"n_cal", &c.split.n_cal},
                             std::pair{"n_test", &c.split.n_test}}) {
      if (s.contains(key)) {
        std::size_t v = 0;
        read(s, key, "split", v);
        *slot = v;
      }
    }
  }

  if (j.contains("backbone")) {
    const auto& b = j.at("backbone");
    check_keys(b, "backbone", {"hidden_widths", "activation", "feature_map"});
    read(b, "hidden_widths", "backbone", c.backbone.hidden_widths);
    if (b.contains("activation") && b.at("activation") != "relu") bad("backbone.activation", "only relu is supported");
    std::string fm = "mlp";
    read(b, "feature_map", "backbone", fm);
    if (fm == "mlp") c.backbone.feature_map = nn::FeatureMap::mlp;
    else if (fm == "identity") c.backbone.feature_map = nn::FeatureMap::identity;
    else bad("backbone.feature_map", "expected mlp or identity");
    if (c.backbone.feature_map == nn::FeatureMap::identity && !b.contains("hidden_widths")) {
      c.backbone.hidden_widths.clear();
    }
  }
  if (j.contains("train")) c.train = train_from_json(j.at("train"), "train", c.train);
  if (j.contains("head_train")) c.head_train = train_from_json(j.at("head_train"), "head_train", c.head_train);
  if (j.contains("methods")) c.methods = methods_from(j.at("methods"), "methods");
  read(j, "target_cov", "", c.target_cov);
  read(j, "lambdas", "", c.lambdas);
  if (j.contains("estimators")) {
    c.estimators.clear();
    const auto& e = j.at("estimators");
    if (!e.is_array()) bad("estimators", "expected an array");
    for (const auto& x : e) {
      try {
        c.estimators.push_back(llla::sigma2_estimator_from_string(x.get<std::string>()));
      } catch (const std::exception& err) {
        bad("estimators", err.what());
      }
    }
  }
  read(j, "seeds", "", c.seeds);
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    check_keys(t, "thresholds", {"eps_r", "eps_trace", "tau_rho"});
    read(t, "eps_r", "thresholds", c.thresholds.eps_r);
    read(t, "eps_trace", "thresholds", c.thresholds.eps_trace);
    read(t, "tau_rho", "thresholds", c.thresholds.tau_rho);
  }
  read(j, "subsample", "", c.subsample);
  read(j, "subsample_points", "", c.subsample_points);
  read(j, "workers", "", c.workers);
  read(j, "conf_level", "", c.conf_level);
  if (j.contains("inject_failure")) c.inject_failure = methods_from(j.at("inject_failure"), "inject_failure");
  std::string out_dir = c.output_dir.string();
  read(j, "output_dir", "", out_dir);
  c.output_dir = out_dir;
  read(j, "save_models", "", c.save_models);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    bad("config", e.what());
  }
  return config_from_json(j);
}

json decomposition_to_json(const diag::DecompositionSummary& s) {
  return {{"split", std::string(diag::to_string(s.split))},
          {"Epistemic (mean)", number(s.epi_mean)},
          {"r (mean)", number(s.r_mean)},
          {"r (median)", number(s.r_median)},
          {"Q0.10(r)", number(s.r_q10)},
          {"Q0.90(r)", number(s.r_q90)},
          {"P(r<1%)", number(s.frac_r_below_1pct)},
          {"tr(Sigma)", number(s.trace_sigma)},
          {"sigma2", number(s.sigma2)}};
}

json spearman_to_json(const diag::SpearmanResult& s) {
  return {{"rho", number(s.rho)}, {"p", number(s.p_value)}, {"n", s.n}};
}

json verdict_to_json(const diag::SelectionVerdict& v) {
  return {{"choice", std::string(diag::to_string(v.choice))},
          {"median_r", number(v.median_r)},
          {"trace", number(v.trace)},
          {"rho", number(v.rho)},
          {"thresholds",
           {{"eps_r", v.thresholds.eps_r},
            {"eps_trace", v.thresholds.eps_trace},
            {"tau_rho", v.thresholds.tau_rho}}}};
}

namespace {

json row_to_json(const eval::MetricsRow& r) {
  return {{"method", std::string(conformal::to_string(r.method))},
          {"seed", r.seed},
          {"coverage", number(r.coverage)},
          {"covered", r.covered},
          {"n_test", r.n_test},
          {"width_mean", number(r.width_mean)},
          {"width_infinite", r.width_infinite},
          {"mae", number(r.mae)},
          {"threshold", number(r.threshold)},
          {"rank_k", r.rank_k},
          {"m_cal", r.m_cal},
          {"cqr_clamped", r.cqr_clamped}};
}

json bounds(const eval::Bounds& b) { return json::array({number(b.lo), number(b.hi)}); }

json aggregate_to_json(const eval::AggregateRow& a) {
  return {{"method", std::string(conformal::to_string(a.method))},
          {"coverage_mean", number(a.coverage_mean)},
          {"coverage_sd", number(a.coverage_sd)},
          {"coverage_wilson", bounds(a.coverage_wilson)},
          {"width_mean", number(a.width_mean)},
          {"width_sd", number(a.width_sd)},
          {"width_t", bounds(a.width_t)},
          {"width_infinite", a.width_infinite},
          {"mae_mean", number(a.mae_mean)},
          {"mae_sd", number(a.mae_sd)},
          {"mae_t", bounds(a.mae_t)},
          {"seeds", a.seeds}};
}

json seed_diagnostics_json(const eval::SeedDiagnostics& d) {
  json sub = json::array();
  for (const auto& p : d.subsample) {
    sub.push_back({{"n", p.n},
                   {"Epistemic (mean)", number(p.epi_mean)},
                   {"tr(Sigma)", number(p.trace_sigma)},
                   {"sigma2", number(p.sigma2)}});
  }
  return {{"decomposition", json::array({decomposition_to_json(d.calibration),
                                         decomposition_to_json(d.test)})},
          {"spearman",
           {{"calibration", spearman_to_json(d.spearman_calibration)},
            {"test", spearman_to_json(d.spearman_test)}}},
          {"selection", verdict_to_json(d.verdict)},
          {"subsample", sub},
          {"lambda", d.lambda},
          {"sigma2_estimator", std::string(llla::to_string(d.estimator))},
          {"sigma2_estimator_fallback", d.estimator_fallback},
          {"backbone_loss", {{"initial", number(d.backbone_initial_loss)},
                             {"final", number(d.backbone_final_loss)}}}};
}

json metadata_json() {
  return {
      {"format", "claps-report/1"},
      {"interpretations",
       {{"sigma2_evidence", "MacKay fixed point gamma = d - lambda*tr(M^-1)"},
        {"sigma2_residual", "unit-noise ridge (Phi'Phi + lambda I)^-1 Phi'y, RSS/n"},
        {"posterior_precision", "M = lambda I + Phi'Phi / sigma2"},
        {"rank_rule", "k = ceil((m+1)(1-cov)) lower tail for claps, ceil((m+1)cov) upper tail otherwise"},
        {"tie_breaking", "deterministic stable ascending sort"},
        {"spearman_p_value", "Student-t approximation, n-2 dof"},
        {"wilson_counts", "pooled covered counts across seeds"},
        {"quantile_convention", "nearest rank"},
        {"selection_split", "calibration"},
        {"scale_head", "softplus output fitted to |y - mu| by MSE on frozen features, floored at 1e-3"},
        {"mae", "claps: Laplace mean; baseline_cp/norm_cp: point head; cqr: quantile midpoint"}}},
      {"training_defaults",
       {{"optimizer", "adam(0.9, 0.999, 1e-8)"},
        {"activation", "relu"},
        {"initialization", "He-normal hidden, N(0, 1/fan_in) head, zero biases"},
        {"baseline_heads", "trained on frozen backbone features"}}},
  };
}

}  // namespace

json report_to_json(const eval::ExperimentReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json rows = json::array();
    for (const auto& row : s.rows) rows.push_back(row_to_json(row));
    json failures = json::array();
    for (const auto& f : s.failures) {
      failures.push_back({{"method", std::string(conformal::to_string(f.method))}, {"error", f.message}});
    }
    json js = {{"seed", s.seed},
               {"sizes", {{"train", s.n_train}, {"calibration", s.n_cal}, {"test", s.n_test}}},
               {"rows", rows},
               {"failures", failures},
               {"audit",
                {{"coverage_recount_ok", s.audit.coverage_recount_ok},
                 {"claps_width_ok", s.audit.claps_width_ok},
                 {"claps_width_abs_diff", number(s.audit.claps_width_max_abs_diff)}}}};
    if (!s.fatal_error.empty()) js["fatal_error"] = s.fatal_error;
    if (s.diagnostics) js["diagnostics"] = seed_diagnostics_json(*s.diagnostics);
    seeds.push_back(js);
  }
  json aggs = json::array();
  for (const auto& a : r.aggregates) aggs.push_back(aggregate_to_json(a));
  return {{"metadata", metadata_json()},
          {"config", config_to_json(r.config)},
          {"seeds", seeds},
          {"aggregates", aggs}};
}

json diagnostics_to_json(const eval::ExperimentReport& r) {
  json out = json::array();
  for (const auto& s : r.seeds) {
    if (!s.diagnostics) continue;
    json j = seed_diagnostics_json(*s.diagnostics);
    j["seed"] = s.seed;
    out.push_back(j);
  }
  return {{"format", "claps-diagnostics/1"}, {"run_name", r.config.run_name}, {"seeds", out}};
}

json ablation_to_json(const eval::AblationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"seed", row.seed},
              {"lambda", row.lambda},
              {"estimator", std::string(llla::to_string(row.estimator))},
              {"Cov", number(row.coverage)},
              {"Wid", number(row.width)},
              {"t", number(row.t)},
              {"sigma2", number(row.sigma2)}};
    if (!row.error.empty()) j["error"] = row.error;
    rows.push_back(j);
  }
  json trend = json::object();
  for (const auto& [est, label] : r.width_trend) trend[std::string(llla::to_string(est))] = label;
  return {{"metadata", metadata_json()},
          {"config", config_to_json(r.config)},
          {"rows", rows},
          {"coverage_spread", number(r.coverage_spread)},
          {"width_trend_vs_lambda", trend}};
}

std::string metrics_csv(const eval::ExperimentReport& r) {
  std::ostringstream os;
  os << "seed,method,coverage,covered,n_test,width_mean,width_infinite,mae,threshold,rank_k,m_cal\n";
  for (const auto& s : r.seeds) {
    for (const auto& row : s.rows) {
      os << row.seed << ',' << conformal::to_string(row.method) << ',' << format_double(row.coverage)
         << ',' << row.covered << ',' << row.n_test << ',' << format_double(row.width_mean) << ','
         << (row.width_infinite ? 1 : 0) << ',' << format_double(row.mae) << ','
         << format_double(row.threshold) << ',' << row.rank_k << ',' << row.m_cal << '\n';
    }
  }
  return os.str();
}

std::string aggregates_csv(const eval::ExperimentReport& r) {
  std::ostringstream os;
  os << "method,coverage_mean,coverage_sd,coverage_lo,coverage_hi,width_mean,width_sd,width_lo,"
        "width_hi,mae_mean,mae_sd,mae_lo,mae_hi,n_seeds\n";
  for (const auto& a : r.aggregates) {
    os << conformal::to_string(a.method) << ',' << format_double(a.coverage_mean) << ','
       << format_double(a.coverage_sd) << ',' << format_double(a.coverage_wilson.lo) << ','
       << format_double(a.coverage_wilson.hi) << ',' << format_double(a.width_mean) << ','
       << format_double(a.width_sd) << ',' << format_double(a.width_t.lo) << ','
       << format_double(a.width_t.hi) << ',' << format_double(a.mae_mean) << ','
       << format_double(a.mae_sd) << ',' << format_double(a.mae_t.lo) << ','
       << format_double(a.mae_t.hi) << ',' << a.seeds.size() << '\n';
  }
  return os.str();
}

std::string subsample_csv(const eval::ExperimentReport& r) {
  std::ostringstream os;
  os << "seed,step,n,epi_mean,trace_sigma,sigma2\n";
  for (const auto& s : r.seeds) {
    if (!s.diagnostics) continue;
    std::size_t step = 1;
    for (const auto& p : s.diagnostics->subsample) {
      os << s.seed << ',' << step++ << ',' << p.n << ',' << format_double(p.epi_mean) << ','
         << format_double(p.trace_sigma) << ',' << format_double(p.sigma2) << '\n';
    }
  }
  return os.str();
}

std::string ablation_csv(const eval::AblationReport& r) {
  std::ostringstream os;
  os << "seed,lambda,estimator,Cov,Wid,t,sigma2,error\n";
  for (const auto& row : r.rows) {
    os << row.seed << ',' << format_double(row.lambda) << ',' << llla::to_string(row.estimator) << ','
       << format_double(row.coverage) << ',' << format_double(row.width) << ','
       << format_double(row.t) << ',' << format_double(row.sigma2) << ',';
    // errors are free text; keep the CSV one-line-per-row
    std::string err = row.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    os << err << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  out << text;
}

void write_run_outputs(const eval::ExperimentReport& r, const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  write_text(run_dir / "report.json", report_to_json(r).dump(2) + "\n");
  write_text(run_dir / "metrics.csv", metrics_csv(r));
  write_text(run_dir / "aggregates.csv", aggregates_csv(r));
  write_text(run_dir / "diagnostics.json", diagnostics_to_json(r).dump(2) + "\n");
  if (r.config.subsample) write_text(run_dir / "subsample.csv", subsample_csv(r));
  for (const auto& s : r.seeds) {
    if (!s.model) continue;
    checkpoint::ModelBundle bundle{s.model->backbone, s.model->posterior,
                                   s.model->claps_calibration_scores, r.config.target_cov};
    checkpoint::save_model_dir(run_dir / "models" / ("seed_" + std::to_string(s.seed)), bundle,
                               &s.model->calibration);
  }
}

void write_ablation_outputs(const eval::AblationReport& r, const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  write_text(run_dir / "ablation.csv", ablation_csv(r));
  write_text(run_dir / "ablation.json", ablation_to_json(r).dump(2) + "\n");
}

}  // namespace claps::report
