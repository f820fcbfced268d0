#pragma once

// Seeded end-to-end runs: split, backbone + auxiliary heads, LLLA, calibration
// of every requested method, test metrics, diagnostics and aggregation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "claps/backbone.hpp"
#include "claps/conformal.hpp"
#include "claps/data.hpp"
#include "claps/diagnostics.hpp"
#include "claps/llla.hpp"
#include "claps/metrics.hpp"

namespace claps::eval {

struct DatasetConfig {
  enum class Kind { csv, linear_gaussian, heteroscedastic };
  Kind kind = Kind::csv;

  // csv
  std::filesystem::path path;
  std::filesystem::path test_path;  // optional pre-split test file
  std::variant<std::string, std::size_t> target = std::string("y");
  char delimiter = ',';

  // synthetic
  std::size_t n = 0;
  std::size_t d = 1;
  double sigma = 1.0;
  std::vector<double> true_w;  // empty: all ones
  double base = 0.1;
  double slope = 0.5;
  std::uint64_t seed = 0;
  /// Draw a fresh synthetic sample for every run seed.
  bool resample_per_seed = true;
};

struct ExperimentConfig {
  std::string run_name = "run";
  DatasetConfig dataset;
  data::SplitSpec split;
  nn::MlpSpec backbone;  // input_dim is filled from the data
  nn::TrainConfig train;
  /// Training schedule for the scale and quantile heads on frozen features.
  nn::TrainConfig head_train;
  std::vector<Method> methods{Method::claps, Method::baseline_cp, Method::norm_cp, Method::cqr};
  double target_cov = 0.9;
  /// run_experiment uses the first entry of each; run_ablation sweeps both.
  std::vector<double> lambdas{llla::kDefaultLambda};
  std::vector<llla::Sigma2Estimator> estimators{llla::Sigma2Estimator::residual};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  diag::SelectionThresholds thresholds;
  bool subsample = false;
  std::size_t subsample_points = 5;
  std::size_t workers = 1;
  double conf_level = 0.95;
  /// Methods forced to fail after calibration; exercises partial-failure paths.
  std::vector<Method> inject_failure;
  std::filesystem::path output_dir = "runs";
  bool save_models = true;

  /// Throws ConfigInvalid naming the offending field.
  void validate() const;
};

struct MethodFailure {
  Method method;
  std::string message;
};

struct SeedDiagnostics {
  diag::DecompositionSummary calibration;
  diag::DecompositionSummary test;
  diag::SpearmanResult spearman_calibration;
  diag::SpearmanResult spearman_test;
  diag::SelectionVerdict verdict;
  std::vector<diag::SubsamplePoint> subsample;
  double lambda = llla::kDefaultLambda;
  llla::Sigma2Estimator estimator = llla::Sigma2Estimator::residual;
  bool estimator_fallback = false;
  double backbone_initial_loss = 0.0;
  double backbone_final_loss = 0.0;
};

struct SelfAudit {
  bool coverage_recount_ok = true;
  bool claps_width_ok = true;
  double claps_width_max_abs_diff = 0.0;
};

/// Everything needed to score new inputs with CLAPS later.
struct ModelArtifacts {
  nn::TrainedBackbone backbone;
  llla::LaplacePosterior posterior;
  std::vector<double> claps_calibration_scores;
  data::Dataset calibration;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::size_t n_train = 0, n_cal = 0, n_test = 0;
  std::vector<MetricsRow> rows;
  std::vector<MethodFailure> failures;
  std::optional<SeedDiagnostics> diagnostics;
  SelfAudit audit;
  std::optional<ModelArtifacts> model;
  /// Per-test-point CLAPS quantities (for closed-form checks and plots).
  std::vector<double> test_v;
  double claps_t = 0.0;
  std::string fatal_error;  // non-empty if the seed could not run at all
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  std::vector<AggregateRow> aggregates;

  bool any_failure() const;
  bool all_failed() const;
};

/// Materializes the dataset for one run seed (synthetic kinds resample).
data::Dataset materialize_dataset(const DatasetConfig& cfg, std::uint64_t run_seed);

/// One seed of the protocol. Method failures are recorded, not thrown.
SeedResult run_seed(const ExperimentConfig& cfg, const data::Dataset& ds, std::uint64_t seed,
                    const data::Dataset* fixed_test = nullptr);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct AblationRow {
  std::uint64_t seed = 0;
  double lambda = 1.0;
  llla::Sigma2Estimator estimator = llla::Sigma2Estimator::residual;
  double coverage = 0.0;
  double width = 0.0;
  double t = 0.0;
  double sigma2 = 0.0;
  std::string error;  // non-empty when the cell failed
};

struct AblationReport {
  ExperimentConfig config;
  std::vector<AblationRow> rows;
  /// max − min coverage over successful cells, per seed, maximized over seeds.
  double coverage_spread = 0.0;
  /// Per estimator: "increasing", "decreasing", "flat" or "mixed" width vs λ.
  std::vector<std::pair<llla::Sigma2Estimator, std::string>> width_trend;
};

/// One backbone per seed; only the Laplace head and calibration are refit
/// for each (λ, estimator) cell.
AblationReport run_ablation(const ExperimentConfig& cfg);

/// Classifies a sequence as increasing / decreasing / flat / mixed, treating
/// relative changes below `tol` as flat.
std::string trend_label(std::span<const double> values, double tol = 0.005);

}  // namespace claps::eval
