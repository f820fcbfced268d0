#include "claps/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "claps/error.hpp"

namespace claps::data {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.name = name;
  out.feature_names = feature_names;
  out.generator = generator;
  out.x = DenseMatrix(rows.size(), x.cols());
  out.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.x.row(i).begin());
    out.y.push_back(y[rows[i]]);
  }
  return out;
}

std::size_t Standardizer::constant_columns() const {
  return static_cast<std::size_t>(std::count(constant.begin(), constant.end(), true));
}

std::vector<double> Standardizer::transform(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) +
                                                  " features, expected " +
                                                  std::to_string(mean.size()));
  }
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / std[j];
  return z;
}

DenseMatrix Standardizer::transform(const DenseMatrix& x) const {
  if (x.cols() != mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix has " + std::to_string(x.cols()) +
                                                  " features, expected " +
                                                  std::to_string(mean.size()));
  }
  DenseMatrix z(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    auto dst = z.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = (src[j] - mean[j]) / std[j];
  }
  return z;
}

std::vector<double> Standardizer::center(std::span<const double> y) const {
  std::vector<double> out(y.begin(), y.end());
  for (double& v : out) v -= target_center;
  return out;
}

Standardizer fit_standardizer(const DenseMatrix& x, std::span<const double> y) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyData, "cannot standardize zero rows");
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  Standardizer s;
  s.mean.assign(p, 0.0);
  s.std.assign(p, 0.0);
  s.constant.assign(p, false);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += x(i, j);
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      const double dv = x(i, j) - s.mean[j];
      s.std[j] += dv * dv;
    }
  for (std::size_t j = 0; j < p; ++j) {
    const double sd = std::sqrt(s.std[j] / static_cast<double>(n));
    const double scale = std::max(1.0, std::abs(s.mean[j]));
    if (!(sd > 1e-12 * scale)) {
      s.std[j] = 1.0;
      s.constant[j] = true;
    } else {
      s.std[j] = sd;
    }
  }
  s.target_center =
      y.empty() ? 0.0 : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  return s;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

bool parse_number(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

CsvLoadResult load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::NoNumericColumns, "empty file " + path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_line(line, options.delimiter);
  for (auto& h : header) h = trim(h);
  if (header.empty()) throw Error(ErrorCode::NoNumericColumns, "no header columns");

  std::size_t target_idx = 0;
  if (options.features_only) {
    target_idx = header.size();
  } else if (const auto* name = std::get_if<std::string>(&options.target)) {
    auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw Error(ErrorCode::TargetMissing, "no column named '" + *name + "'");
    target_idx = static_cast<std::size_t>(it - header.begin());
  } else {
    target_idx = std::get<std::size_t>(options.target);
    if (target_idx >= header.size()) {
      throw Error(ErrorCode::TargetMissing, "target index " + std::to_string(target_idx) +
                                                " out of range for " +
                                                std::to_string(header.size()) + " columns");
    }
  }
  if (header.size() < (options.features_only ? 1u : 2u)) throw Error(ErrorCode::NoNumericColumns, "need at least one feature column");

  CsvLoadResult result;
  Dataset& ds = result.dataset;
  ds.name = path.stem().string();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != target_idx) ds.feature_names.push_back(header[j]);

  std::vector<double> xs;
  std::vector<double> row(header.size());
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, options.delimiter);
    bool ok = cells.size() == header.size();
    for (std::size_t j = 0; ok && j < cells.size(); ++j) ok = parse_number(cells[j], row[j]);
    if (!ok) {
      ++result.dropped_rows;
      continue;
    }
    for (std::size_t j = 0; j < row.size(); ++j)
      if (j != target_idx) xs.push_back(row[j]);
    ds.y.push_back(options.features_only ? std::numeric_limits<double>::quiet_NaN()
                                         : row[target_idx]);
  }
  if (ds.y.empty()) throw Error(ErrorCode::NoNumericColumns, "no fully numeric rows in " + path.string());
  ds.x = DenseMatrix(ds.y.size(), ds.feature_names.size(), std::move(xs));
  return result;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  for (std::size_t j = 0; j < ds.x.cols(); ++j) {
    out << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j))
        << delimiter;
  }
  out << "y\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.x(i, j));
      out << buf << delimiter;
    }
    std::snprintf(buf, sizeof buf, "%.17g", ds.y[i]);
    out << buf << '\n';
  }
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

namespace {

Split assemble(const Dataset& ds, const std::vector<std::size_t>& perm, std::size_t n_train,
               std::size_t n_cal, std::size_t n_test) {
  std::vector<std::size_t> tr(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> ca(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                              perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal));
  std::vector<std::size_t> te(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal),
                              perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal + n_test));
  Split s{ds.subset(tr), ds.subset(ca), ds.subset(te), {}};
  s.stats = fit_standardizer(s.train.x, s.train.y);
  return s;
}

void check_sizes(std::size_t n_train, std::size_t n_cal, std::size_t n_test) {
  if (n_train == 0) throw Error(ErrorCode::TooSmall, "training split is empty");
  if (n_cal == 0) throw Error(ErrorCode::TooSmall, "calibration split is empty");
  if (n_test == 0) throw Error(ErrorCode::TooSmall, "test split is empty");
}

}  // namespace

Split split(const Dataset& ds, const SplitSpec& spec) {
  const std::size_t n = ds.size();
  if (n < 3) throw Error(ErrorCode::TooSmall, "need at least 3 rows, have " + std::to_string(n));
  const auto perm = seeded_permutation(n, spec.seed);

  if (spec.n_train || spec.n_cal || spec.n_test) {
    if (!(spec.n_train && spec.n_cal && spec.n_test)) {
      throw Error(ErrorCode::TooSmall, "explicit split sizes must give train, cal and test");
    }
    check_sizes(*spec.n_train, *spec.n_cal, *spec.n_test);
    if (*spec.n_train + *spec.n_cal + *spec.n_test > n) {
      throw Error(ErrorCode::TooSmall, "explicit split sizes exceed " + std::to_string(n) + " rows");
    }
    return assemble(ds, perm, *spec.n_train, *spec.n_cal, *spec.n_test);
  }

  const auto n_cal = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.cal_frac));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_frac));
  const std::size_t n_train = n - std::min(n, n_cal + n_test);
  check_sizes(n_train, n_cal, n_test);
  return assemble(ds, perm, n_train, n_cal, n_test);
}

Split split_with_fixed_test(const Dataset& pool, const Dataset& fixed_test, const SplitSpec& spec) {
  if (fixed_test.size() == 0) throw Error(ErrorCode::TooSmall, "fixed test split is empty");
  if (fixed_test.num_features() != pool.num_features()) {
    throw Error(ErrorCode::DimensionMismatch, "fixed test split has a different feature count");
  }
  const std::size_t n = pool.size();
  const double denom = spec.train_frac + spec.cal_frac;
  const auto n_cal = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * (denom > 0 ? spec.cal_frac / denom : 0.0)));
  const std::size_t n_train = n - std::min(n, n_cal);
  check_sizes(n_train, n_cal, fixed_test.size());
  const auto perm = seeded_permutation(n, spec.seed);
  std::vector<std::size_t> tr(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> ca(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  Split s{pool.subset(tr), pool.subset(ca), fixed_test, {}};
  s.stats = fit_standardizer(s.train.x, s.train.y);
  return s;
}

Dataset synth_linear_gaussian(std::size_t n, std::size_t d, std::vector<double> true_w,
                              double sigma, std::uint64_t seed) {
  if (true_w.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "true_w has " + std::to_string(true_w.size()) +
                                                  " entries, expected " + std::to_string(d));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "synth_linear_gaussian";
  ds.x = DenseMatrix(n, d);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      ds.x(i, j) = normal(rng);
      mean += ds.x(i, j) * true_w[j];
    }
    ds.y[i] = mean + sigma * normal(rng);
  }
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  ds.generator = LinearGaussianParams{std::move(true_w), sigma, seed};
  return ds;
}

Dataset synth_heteroscedastic(std::size_t n, std::uint64_t seed, double base, double slope) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "synth_heteroscedastic";
  ds.x = DenseMatrix(n, 1);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = uniform(rng);
    ds.x(i, 0) = x;
    ds.y[i] = std::sin(2.0 * x) + (base + slope * std::abs(x)) * normal(rng);
  }
  ds.feature_names = {"x0"};
  ds.generator = HeteroscedasticParams{base, slope, seed};
  return ds;
}

}  // namespace claps::data
