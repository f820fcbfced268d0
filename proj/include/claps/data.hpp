#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "claps/linalg.hpp"

namespace claps::data {

using linalg::DenseMatrix;

/// Generator parameters kept alongside synthetic data so tests can use the
/// true model as an oracle.
struct LinearGaussianParams {
  std::vector<double> true_w;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

struct HeteroscedasticParams {
  double base = 0.1;
  double slope = 0.5;
  std::uint64_t seed = 0;
};

using Generator = std::variant<std::monostate, LinearGaussianParams, HeteroscedasticParams>;

struct Dataset {
  std::string name;
  DenseMatrix x;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  Generator generator;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t num_features() const noexcept { return x.cols(); }

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// Per-column z-scoring fitted on the training split, plus the target mean.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;  // constant columns carry 1
  std::vector<bool> constant;
  double target_center = 0.0;

  std::size_t dim() const noexcept { return mean.size(); }
  std::size_t constant_columns() const;

  std::vector<double> transform(std::span<const double> x) const;
  DenseMatrix transform(const DenseMatrix& x) const;
  std::vector<double> center(std::span<const double> y) const;
};

/// Fit on training rows only. Population std (divide by n).
Standardizer fit_standardizer(const DenseMatrix& x, std::span<const double> y);

struct CsvOptions {
  std::variant<std::string, std::size_t> target = std::size_t{0};
  char delimiter = ',';
  /// Every column is a feature and y is filled with NaN (`target` ignored).
  bool features_only = false;
};

struct CsvLoadResult {
  Dataset dataset;
  std::size_t dropped_rows = 0;
};

/// Header row required. Rows with any missing or non-numeric cell are dropped
/// and counted.
CsvLoadResult load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes features then the target column "y" with 17 significant digits.
void write_csv(const Dataset& ds, const std::filesystem::path& path, char delimiter = ',');

struct SplitSpec {
  double train_frac = 0.6;
  double cal_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;
  /// When set, the test split is supplied externally and the fractions
  /// partition the remaining data into train/cal (test_frac is ignored).
  bool fixed_test = false;
  /// Explicit sizes override the fractions; any remainder is discarded.
  std::optional<std::size_t> n_train, n_cal, n_test;
};

struct Split {
  Dataset train;
  Dataset cal;
  Dataset test;
  Standardizer stats;
};

/// Seeded shuffle then contiguous partition (floors, remainder to train).
Split split(const Dataset& ds, const SplitSpec& spec);

/// Pre-split protocol: `fixed_test` is kept untouched, `pool` is divided into
/// train/cal by spec.train_frac : spec.cal_frac.
Split split_with_fixed_test(const Dataset& pool, const Dataset& fixed_test, const SplitSpec& spec);

/// x ~ N(0, I), y = xᵀw + σε.
Dataset synth_linear_gaussian(std::size_t n, std::size_t d, std::vector<double> true_w,
                              double sigma, std::uint64_t seed);

/// x ~ U(−3, 3), y = sin(2x) + (a + b|x|)ε.
Dataset synth_heteroscedastic(std::size_t n, std::uint64_t seed, double base, double slope);

/// Deterministic permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace claps::data
