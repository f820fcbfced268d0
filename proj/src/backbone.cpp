#include "claps/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "claps/error.hpp"

namespace claps::nn {

std::size_t MlpSpec::feature_dim() const noexcept {
  if (feature_map == FeatureMap::identity) return input_dim;
  return hidden_widths.empty() ? 0 : hidden_widths.back();
}

void MlpSpec::validate() const {
  if (input_dim == 0) throw Error(ErrorCode::DimensionMismatch, "input_dim must be positive");
  if (feature_map == FeatureMap::mlp) {
    if (hidden_widths.empty()) {
      throw Error(ErrorCode::DimensionMismatch, "an MLP needs at least one hidden layer");
    }
    for (auto w : hidden_widths)
      if (w == 0) throw Error(ErrorCode::DimensionMismatch, "hidden width must be positive");
  } else if (!hidden_widths.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "identity feature map takes no hidden layers");
  }
  if (head.kind == HeadSpec::Kind::quantile_pair &&
      !(0.0 < head.lo_level && head.lo_level < head.hi_level && head.hi_level < 1.0)) {
    throw Error(ErrorCode::IncompatibleHeadLoss, "quantile levels must satisfy 0 < lo < hi < 1");
  }
}

double pinball_loss(double level, double y, double q) {
  const double diff = y - q;
  return diff >= 0.0 ? level * diff : (level - 1.0) * diff;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_compatible(const HeadSpec& head, Loss loss) {
  const bool ok = (loss == Loss::mse && head.kind == HeadSpec::Kind::point) ||
                  (loss == Loss::pinball_pair && head.kind == HeadSpec::Kind::quantile_pair) ||
                  (loss == Loss::scale_abs && head.kind == HeadSpec::Kind::scale);
  if (!ok) throw Error(ErrorCode::IncompatibleHeadLoss, "loss does not match head kind");
}

DenseLayer make_layer(std::size_t out, std::size_t in, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  DenseLayer layer{DenseMatrix(out, in), std::vector<double>(out, 0.0)};
  for (double& w : layer.weight.entries()) w = normal(rng);
  return layer;
}

// out(B×o) = in(B×i)·Wᵀ + b
DenseMatrix affine(const DenseMatrix& in, const DenseLayer& layer) {
  const std::size_t o = layer.weight.rows();
  DenseMatrix out(in.rows(), o);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto x = in.row(r);
    auto y = out.row(r);
    for (std::size_t k = 0; k < o; ++k) {
      const double* w = layer.weight.row(k).data();
      double s = layer.bias[k];
      for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
      y[k] = s;
    }
  }
  return out;
}

void relu_inplace(DenseMatrix& m) {
  for (double& v : m.entries()) v = v > 0.0 ? v : 0.0;
}

// Activations of a ReLU stack whose last layer is linear. acts[0] = input.
std::vector<DenseMatrix> forward_all(const std::vector<DenseLayer>& layers, const DenseMatrix& in) {
  std::vector<DenseMatrix> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(in);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    DenseMatrix next = affine(acts.back(), layers[l]);
    if (l + 1 < layers.size()) relu_inplace(next);
    acts.push_back(std::move(next));
  }
  return acts;
}

// Mean loss over rows; fills d(loss)/d(out) when `dout` is non-null.
double loss_and_dout(const DenseMatrix& out, std::span<const double> t, Loss loss,
                     const HeadSpec& head, DenseMatrix* dout) {
  const std::size_t n = out.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (dout) *dout = DenseMatrix(n, out.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    switch (loss) {
      case Loss::mse: {
        const double e = out(i, 0) - t[i];
        total += e * e;
        if (dout) (*dout)(i, 0) = 2.0 * e * inv_n;
        break;
      }
      case Loss::scale_abs: {
        const double h = softplus(out(i, 0));
        const double e = h - t[i];
        total += e * e;
        if (dout) (*dout)(i, 0) = 2.0 * e * sigmoid(out(i, 0)) * inv_n;
        break;
      }
      case Loss::pinball_pair: {
        const double levels[2] = {head.lo_level, head.hi_level};
        for (std::size_t k = 0; k < 2; ++k) {
          total += pinball_loss(levels[k], t[i], out(i, k));
          if (dout) (*dout)(i, k) = (t[i] >= out(i, k) ? -levels[k] : 1.0 - levels[k]) * inv_n;
        }
        break;
      }
    }
  }
  return total * inv_n;
}

struct LayerGrad {
  DenseMatrix weight;
  std::vector<double> bias;
};

// Backprop through a ReLU stack (last layer linear). Only the trailing
// `trainable` layers get gradients.
std::vector<LayerGrad> backward(const std::vector<DenseLayer>& layers,
                                const std::vector<DenseMatrix>& acts, DenseMatrix delta,
                                std::size_t trainable) {
  const std::size_t L = layers.size();
  std::vector<LayerGrad> grads(L);
  for (std::size_t l = L; l-- > L - trainable;) {
    const DenseMatrix& in = acts[l];
    const DenseLayer& layer = layers[l];
    const std::size_t o = layer.weight.rows();
    const std::size_t ni = layer.weight.cols();
    LayerGrad g{DenseMatrix(o, ni), std::vector<double>(o, 0.0)};
    for (std::size_t r = 0; r < in.rows(); ++r) {
      auto x = in.row(r);
      auto dr = delta.row(r);
      for (std::size_t k = 0; k < o; ++k) {
        const double dk = dr[k];
        if (dk == 0.0) continue;
        g.bias[k] += dk;
        double* gw = &g.weight(k, 0);
        for (std::size_t j = 0; j < ni; ++j) gw[j] += dk * x[j];
      }
    }
    if (l > L - trainable) {
      DenseMatrix prev(in.rows(), ni);
      for (std::size_t r = 0; r < in.rows(); ++r) {
        auto dr = delta.row(r);
        auto pr = prev.row(r);
        for (std::size_t k = 0; k < o; ++k) {
          const double dk = dr[k];
          if (dk == 0.0) continue;
          const double* w = layer.weight.row(k).data();
          for (std::size_t j = 0; j < ni; ++j) pr[j] += dk * w[j];
        }
        auto a = in.row(r);  // post-ReLU activation of layer l-1
        for (std::size_t j = 0; j < ni; ++j)
          if (!(a[j] > 0.0)) pr[j] = 0.0;
      }
      delta = std::move(prev);
    }
    grads[l] = std::move(g);
  }
  return grads;
}

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  std::size_t step = 0;
};

void adam_update(std::vector<DenseLayer>& layers, const std::vector<LayerGrad>& grads,
                 std::size_t trainable, AdamState& st, const TrainConfig& cfg) {
  const std::size_t L = layers.size();
  ++st.step;
  const double b1 = cfg.adam.beta1;
  const double b2 = cfg.adam.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  auto apply = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                   std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam.eps);
    }
  };
  for (std::size_t l = L - trainable, s = 0; l < L; ++l, ++s) {
    apply(layers[l].weight.entries(), grads[l].weight.entries(), st.m_w[s], st.v_w[s]);
    apply(layers[l].bias, grads[l].bias, st.m_b[s], st.v_b[s]);
  }
}

DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::size_t> idx) {
  DenseMatrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double full_loss(const std::vector<DenseLayer>& layers, const DenseMatrix& in,
                 std::span<const double> t, Loss loss, const HeadSpec& head) {
  auto acts = forward_all(layers, in);
  return loss_and_dout(acts.back(), t, loss, head, nullptr);
}

// Mini-batch Adam over the trailing `trainable` layers.
void fit_layers(std::vector<DenseLayer>& layers, std::size_t trainable, const DenseMatrix& in,
                std::span<const double> t, Loss loss, const HeadSpec& head,
                const TrainConfig& cfg) {
  const std::size_t n = in.rows();
  const std::size_t L = layers.size();
  AdamState st;
  for (std::size_t l = L - trainable; l < L; ++l) {
    st.m_w.emplace_back(layers[l].weight.entries().size(), 0.0);
    st.v_w.emplace_back(layers[l].weight.entries().size(), 0.0);
    st.m_b.emplace_back(layers[l].bias.size(), 0.0);
    st.v_b.emplace_back(layers[l].bias.size(), 0.0);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<double> tb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    }
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      DenseMatrix xb = gather_rows(in, idx);
      tb.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) tb[i] = t[idx[i]];
      auto acts = forward_all(layers, xb);
      DenseMatrix dout;
      loss_and_dout(acts.back(), tb, loss, head, &dout);
      auto grads = backward(layers, acts, std::move(dout), trainable);
      adam_update(layers, grads, trainable, st, cfg);
    }
  }
}

std::vector<DenseLayer> stack(const TrainedBackbone& m) {
  std::vector<DenseLayer> layers = m.hidden;
  layers.push_back(m.head);
  return layers;
}

void validate_training(const data::Dataset& set, const TrainConfig& cfg) {
  if (set.size() == 0) throw Error(ErrorCode::EmptyData, "training split is empty");
  if (cfg.batch_size == 0) throw Error(ErrorCode::EmptyData, "batch_size must be at least 1");
}

}  // namespace

TrainedBackbone initialize(const MlpSpec& spec, const data::Standardizer& stats,
                           std::uint64_t seed) {
  spec.validate();
  if (stats.dim() != spec.input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "standardizer has " + std::to_string(stats.dim()) +
                                                  " columns, spec expects " +
                                                  std::to_string(spec.input_dim));
  }
  std::mt19937_64 rng(seed);
  TrainedBackbone m;
  m.spec = spec;
  m.stats = stats;
  m.seed = seed;
  std::size_t in = spec.input_dim;
  if (spec.feature_map == FeatureMap::mlp) {
    for (auto width : spec.hidden_widths) {
      m.hidden.push_back(make_layer(width, in, std::sqrt(2.0 / static_cast<double>(in)), rng));
      in = width;
    }
  }
  m.head = make_layer(spec.head.outputs(), in, std::sqrt(1.0 / static_cast<double>(in)), rng);
  return m;
}

std::vector<double> training_targets(const TrainedBackbone& model, const data::Dataset& set,
                                     Loss loss) {
  std::vector<double> t = model.stats.center(set.y);
  if (loss == Loss::scale_abs)
    for (double& v : t) v = std::abs(v);
  return t;
}

TrainedBackbone train(const MlpSpec& spec, const data::Dataset& train_set,
                      const data::Standardizer& stats, Loss loss, const TrainConfig& cfg) {
  check_compatible(spec.head, loss);
  validate_training(train_set, cfg);
  TrainedBackbone m = initialize(spec, stats, cfg.seed);
  const DenseMatrix z = stats.transform(train_set.x);
  const auto t = training_targets(m, train_set, loss);

  auto layers = stack(m);
  m.initial_loss = full_loss(layers, z, t, loss, spec.head);
  fit_layers(layers, layers.size(), z, t, loss, spec.head, cfg);
  m.final_loss = full_loss(layers, z, t, loss, spec.head);
  m.head = layers.back();
  layers.pop_back();
  m.hidden = std::move(layers);
  return m;
}

TrainedBackbone train_head(const TrainedBackbone& base, const HeadSpec& head,
                           const data::Dataset& train_set, Loss loss, const TrainConfig& cfg) {
  check_compatible(head, loss);
  validate_training(train_set, cfg);
  TrainedBackbone m = base;
  m.spec.head = head;
  m.spec.validate();
  m.seed = cfg.seed;

  const DenseMatrix phi = features(base, train_set.x);
  std::vector<double> t;
  if (loss == Loss::scale_abs) {
    if (base.spec.head.kind != HeadSpec::Kind::point) {
      throw Error(ErrorCode::IncompatibleHeadLoss, "scale head needs a point-head base model");
    }
    t.resize(train_set.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = std::abs(train_set.y[i] - head_from_features(base, phi.row(i)).value);
    }
  } else {
    t = base.stats.center(train_set.y);
  }

  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  const std::size_t d = phi.cols();
  std::vector<DenseLayer> layers{
      make_layer(head.outputs(), d, std::sqrt(1.0 / static_cast<double>(d)), rng)};
  m.initial_loss = full_loss(layers, phi, t, loss, head);
  fit_layers(layers, 1, phi, t, loss, head, cfg);
  m.final_loss = full_loss(layers, phi, t, loss, head);
  m.head = std::move(layers.front());
  return m;
}

std::vector<double> features(const TrainedBackbone& model, std::span<const double> x) {
  std::vector<double> a = model.stats.transform(x);
  for (const auto& layer : model.hidden) {
    std::vector<double> next(layer.weight.rows());
    for (std::size_t k = 0; k < next.size(); ++k) {
      const double s = layer.bias[k] + linalg::dot(layer.weight.row(k), a);
      next[k] = s > 0.0 ? s : 0.0;
    }
    a = std::move(next);
  }
  return a;
}

DenseMatrix features(const TrainedBackbone& model, const DenseMatrix& x) {
  DenseMatrix a = model.stats.transform(x);
  for (const auto& layer : model.hidden) {
    a = affine(a, layer);
    relu_inplace(a);
  }
  return a;
}

HeadOutput head_from_features(const TrainedBackbone& model, std::span<const double> phi) {
  if (phi.size() != model.head.weight.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "feature vector has wrong length");
  }
  HeadOutput out;
  out.kind = model.spec.head.kind;
  const double c = model.stats.target_center;
  auto raw = [&](std::size_t k) {
    return model.head.bias[k] + linalg::dot(model.head.weight.row(k), phi);
  };
  switch (out.kind) {
    case HeadSpec::Kind::point:
      out.value = raw(0) + c;
      break;
    case HeadSpec::Kind::scale:
      out.value = softplus(raw(0));
      break;
    case HeadSpec::Kind::quantile_pair:
      out.lo = raw(0) + c;
      out.hi = raw(1) + c;
      break;
  }
  return out;
}

HeadOutput head_forward(const TrainedBackbone& model, std::span<const double> x) {
  const auto phi = features(model, x);
  return head_from_features(model, phi);
}

double batch_loss(const TrainedBackbone& model, const DenseMatrix& z,
                  std::span<const double> targets, Loss loss) {
  check_compatible(model.spec.head, loss);
  return full_loss(stack(model), z, targets, loss, model.spec.head);
}

Gradients batch_gradient(const TrainedBackbone& model, const DenseMatrix& z,
                         std::span<const double> targets, Loss loss) {
  check_compatible(model.spec.head, loss);
  const auto layers = stack(model);
  auto acts = forward_all(layers, z);
  DenseMatrix dout;
  loss_and_dout(acts.back(), targets, loss, model.spec.head, &dout);
  auto grads = backward(layers, acts, std::move(dout), layers.size());
  Gradients g;
  for (auto& lg : grads) {
    g.weight.push_back(std::move(lg.weight));
    g.bias.push_back(std::move(lg.bias));
  }
  return g;
}

}  // namespace claps::nn
