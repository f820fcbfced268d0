#pragma once

// JSON/CSV serialization of configs, run reports, diagnostics and ablations.
//
// Output layout for a run directory:
//   report.json       resolved config, per-seed rows, aggregates, diagnostics
//   metrics.csv       one row per (seed, method)
//   aggregates.csv    per-method mean/sd and confidence intervals
//   diagnostics.json  variance decomposition + Spearman signal per seed/split
//   subsample.csv     contraction curves (when enabled)
//   models/seed_<s>/  checkpoints usable by `claps score` / `claps diagnose`
// Ablation directories hold ablation.csv and ablation.json.

#include <filesystem>
#include <string>

#include "claps/experiment.hpp"
#include "json.hpp"

namespace claps::report {

using nlohmann::json;

/// 17 significant digits; "inf" / "-inf" / "nan" for non-finite values.
std::string format_double(double v);

/// Finite values as numbers, non-finite as the strings above.
json number(double v);
/// Inverse of `number`.
double to_double(const json& j);

json config_to_json(const eval::ExperimentConfig& cfg);
/// Missing fields take defaults; unknown or malformed fields throw
/// ConfigInvalid naming the field path.
eval::ExperimentConfig config_from_json(const json& j);
eval::ExperimentConfig load_config(const std::filesystem::path& path);

json decomposition_to_json(const diag::DecompositionSummary& s);
json spearman_to_json(const diag::SpearmanResult& s);
json verdict_to_json(const diag::SelectionVerdict& v);

json report_to_json(const eval::ExperimentReport& r);
json diagnostics_to_json(const eval::ExperimentReport& r);
json ablation_to_json(const eval::AblationReport& r);

std::string metrics_csv(const eval::ExperimentReport& r);
std::string aggregates_csv(const eval::ExperimentReport& r);
std::string subsample_csv(const eval::ExperimentReport& r);
std::string ablation_csv(const eval::AblationReport& r);

/// Writes every run artifact under `run_dir` (created if needed).
void write_run_outputs(const eval::ExperimentReport& r, const std::filesystem::path& run_dir);
void write_ablation_outputs(const eval::AblationReport& r, const std::filesystem::path& run_dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace claps::report
