#pragma once

// Fixed-architecture ReLU MLP: a shared feature extractor φ(x) (the last
// hidden layer) plus one linear head. The point head is trained end to end;
// scale and quantile heads are fitted on frozen features.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "claps/data.hpp"
#include "claps/linalg.hpp"

namespace claps::nn {

using linalg::DenseMatrix;

enum class Activation { relu };

/// `identity` skips the hidden stack: φ(x) is the standardized input. Used
/// for the exactly-specified linear model where the Laplace head is correct.
enum class FeatureMap { mlp, identity };

struct HeadSpec {
  enum class Kind { point, scale, quantile_pair };
  Kind kind = Kind::point;
  double lo_level = 0.05;
  double hi_level = 0.95;

  std::size_t outputs() const noexcept { return kind == Kind::quantile_pair ? 2 : 1; }
  static HeadSpec point() { return {}; }
  static HeadSpec scale() { return {Kind::scale, 0.0, 0.0}; }
  static HeadSpec quantile_pair(double lo, double hi) { return {Kind::quantile_pair, lo, hi}; }
};

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths{128, 128};
  Activation activation = Activation::relu;
  HeadSpec head;
  FeatureMap feature_map = FeatureMap::mlp;

  /// d, the width of φ(x).
  std::size_t feature_dim() const noexcept;
  void validate() const;
};

enum class Loss { mse, pinball_pair, scale_abs };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  AdamParams adam;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct DenseLayer {
  DenseMatrix weight;  // out × in
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct TrainedBackbone {
  MlpSpec spec;
  std::vector<DenseLayer> hidden;
  DenseLayer head;
  data::Standardizer stats;
  std::uint64_t seed = 0;
  /// Full-data training loss before the first and after the last epoch.
  double initial_loss = 0.0;
  double final_loss = 0.0;

  bool operator==(const TrainedBackbone& o) const {
    return hidden == o.hidden && head == o.head && seed == o.seed &&
           stats.mean == o.stats.mean && stats.std == o.stats.std &&
           stats.target_center == o.stats.target_center;
  }
};

struct HeadOutput {
  HeadSpec::Kind kind = HeadSpec::Kind::point;
  double value = 0.0;  // μ̂ (point) or h(x) (scale)
  double lo = 0.0;     // quantile pair only
  double hi = 0.0;
};

/// Seeded initialization: He-normal hidden weights, zero biases, small head.
TrainedBackbone initialize(const MlpSpec& spec, const data::Standardizer& stats, std::uint64_t seed);

/// Trains every layer. Targets: centered y for mse / pinball_pair, |y − ȳ| for
/// scale_abs. Deterministic in (spec, row order, cfg).
TrainedBackbone train(const MlpSpec& spec, const data::Dataset& train_set,
                      const data::Standardizer& stats, Loss loss, const TrainConfig& cfg);

/// Fits a new head on `base`'s frozen features. For scale_abs the target is
/// |y − μ̂(x)| with μ̂ from `base`'s point head.
TrainedBackbone train_head(const TrainedBackbone& base, const HeadSpec& head,
                           const data::Dataset& train_set, Loss loss, const TrainConfig& cfg);

std::vector<double> features(const TrainedBackbone& model, std::span<const double> x);
DenseMatrix features(const TrainedBackbone& model, const DenseMatrix& x);

HeadOutput head_forward(const TrainedBackbone& model, std::span<const double> x);
/// Head applied to an already-computed feature vector.
HeadOutput head_from_features(const TrainedBackbone& model, std::span<const double> phi);

double pinball_loss(double level, double y, double q);
double softplus(double x);

/// Training targets for `loss` in the model's internal (centered) scale.
std::vector<double> training_targets(const TrainedBackbone& model, const data::Dataset& set,
                                     Loss loss);

/// Mean loss and its gradient over all rows of the standardized input `z`.
/// Gradient layout mirrors the model: one entry per hidden layer, then head.
struct Gradients {
  std::vector<DenseMatrix> weight;
  std::vector<std::vector<double>> bias;
};

double batch_loss(const TrainedBackbone& model, const DenseMatrix& z,
                  std::span<const double> targets, Loss loss);
Gradients batch_gradient(const TrainedBackbone& model, const DenseMatrix& z,
                         std::span<const double> targets, Loss loss);

}  // namespace claps::nn
