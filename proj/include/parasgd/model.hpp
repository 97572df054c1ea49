#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "parasgd/batch.hpp"
#include "parasgd/net_spec.hpp"
#include "parasgd/rng.hpp"
#include "parasgd/tensor.hpp"
#include "parasgd/weights.hpp"

namespace parasgd {

struct ForwardResult {
  double loss = 0.0;
  NDArray probabilities;  // [n, num_classes], rows sum to 1
};

struct SgdOptions {
  double learning_rate = 0.01;
  double momentum = 0.0;  // 0 = plain SGD
};

namespace detail {

// Reallocate only when the shape actually changes; forward passes overwrite
// their outputs completely so no clearing is needed on reuse.
inline void ensure_shape(NDArray& t, const std::vector<std::size_t>& shape) {
  if (t.shape() != shape) t = NDArray(shape, 0.0);
}

inline void zero(NDArray& t) {
  for (double& v : t.values()) v = 0.0;
}

}  // namespace detail

/// A trainable realization of a NetSpec: instantiated layers with current
/// weights, attached data iterators, and SGD state. Weight initialization is
/// a deterministic function of (spec, seed): biases start at zero and
/// kernel/linear weights are uniform in [-s, s] with s = sqrt(6/(fan_in+fan_out)),
/// drawn from a per-layer stream derived from (seed, layer index).
///
/// A Net is confined to one execution context at a time; WeightCollections
/// are the only values exchanged between contexts.
class Net {
 public:
  Net(NetSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    build(seed);
  }

  const NetSpec& spec() const noexcept { return spec_; }
  int num_classes() const noexcept { return num_classes_; }
  const SgdOptions& sgd() const noexcept { return sgd_; }
  void set_sgd(SgdOptions opts) {
    if (!(opts.learning_rate > 0.0)) throw std::invalid_argument("sgd: learning rate must be > 0");
    if (opts.momentum < 0.0 || opts.momentum >= 1.0) {
      throw std::invalid_argument("sgd: momentum must be in [0,1)");
    }
    sgd_ = opts;
  }

  void set_training_data(std::shared_ptr<BatchIterator> it) { train_data_ = std::move(it); }
  void set_validation_data(std::shared_ptr<BatchIterator> it) { val_data_ = std::move(it); }

  /// Mean cross-entropy loss over the batch plus per-example class
  /// probabilities. Accepts any batch size; the per-example extents must
  /// match the data layer.
  ForwardResult forward(const Batch& batch) {
    run_forward(batch);
    const Layer& loss = layers_[loss_idx_];
    return ForwardResult{last_loss_, loss.out};
  }

  /// Gradient of the batch-mean loss with respect to every weight tensor.
  /// Recomputes the forward pass internally; the result mirrors the
  /// structure of get_weights().
  WeightCollection backward(const Batch& batch) {
    run_forward(batch);
    return run_backward();
  }

  /// One SGD update from an externally computed gradient:
  /// w <- w - lr * g, or with momentum, v <- mu*v + g; w <- w - lr*v.
  void apply_update(const WeightCollection& grads) {
    std::size_t e = 0;
    for (Layer& l : layers_) {
      const auto& entry = grads.entry(e++);
      if (entry.first != l.spec.name || entry.second.size() != l.params.size()) {
        throw std::invalid_argument("apply_update: gradient structure mismatch at '" +
                                    l.spec.name + "'");
      }
      for (std::size_t t = 0; t < l.params.size(); ++t) {
        if (sgd_.momentum > 0.0) {
          l.velocity[t].decay_add_in_place(entry.second[t], sgd_.momentum);
          l.params[t].add_scaled_in_place(l.velocity[t], -sgd_.learning_rate);
        } else {
          l.params[t].add_scaled_in_place(entry.second[t], -sgd_.learning_rate);
        }
      }
    }
  }

  /// Runs `num_steps` SGD updates, consuming consecutive batches from the
  /// attached training iterator. A zero count is a no-op.
  void train(long num_steps) {
    if (num_steps < 0) throw std::invalid_argument("train: negative step count");
    if (num_steps > 0 && !train_data_) throw std::runtime_error("train: no training data attached");
    for (long s = 0; s < num_steps; ++s) {
      Batch batch = train_data_->next();
      apply_update(backward(batch));
    }
  }

  /// Fraction of correctly argmax-classified examples over `num_steps`
  /// batches from the attached validation iterator.
  double test(long num_steps) {
    if (num_steps < 1) throw std::invalid_argument("test: step count must be >= 1");
    if (!val_data_) throw std::runtime_error("test: no validation data attached");
    long correct = 0, total = 0;
    for (long s = 0; s < num_steps; ++s) {
      Batch batch = val_data_->next();
      run_forward(batch);
      const std::vector<int> pred = argmax_rows(layers_[loss_idx_].out);
      for (std::size_t i = 0; i < batch.labels.size(); ++i) {
        correct += (pred[i] == batch.labels[i]) ? 1 : 0;
      }
      total += static_cast<long>(batch.labels.size());
    }
    return static_cast<double>(correct) / static_cast<double>(total);
  }

  /// Deep copy of all weights, one entry per layer in declaration order
  /// (empty tensor list for parameterless layers).
  WeightCollection get_weights() const {
    WeightCollection w;
    for (const Layer& l : layers_) w.add(l.spec.name, l.params);
    return w;
  }

  /// Replaces all weights from a collection produced by a net with the same
  /// spec. Deep copy; momentum state is not touched.
  void set_weights(const WeightCollection& w) {
    if (w.size() != layers_.size()) {
      throw std::invalid_argument("set_weights: expected " + std::to_string(layers_.size()) +
                                  " entries, got " + std::to_string(w.size()));
    }
    for (Layer& l : layers_) {
      const std::vector<NDArray>* tensors = w.find(l.spec.name);
      if (tensors == nullptr) {
        throw std::invalid_argument("set_weights: missing layer key '" + l.spec.name + "'");
      }
      if (tensors->size() != l.params.size()) {
        throw std::invalid_argument("set_weights: tensor count mismatch at '" + l.spec.name + "'");
      }
      for (std::size_t t = 0; t < l.params.size(); ++t) {
        if (!(*tensors)[t].same_shape(l.params[t])) {
          throw std::invalid_argument("set_weights: shape mismatch at '" + l.spec.name + "'");
        }
      }
    }
    for (Layer& l : layers_) {
      const std::vector<NDArray>* tensors = w.find(l.spec.name);
      for (std::size_t t = 0; t < l.params.size(); ++t) l.params[t] = (*tensors)[t];
    }
  }

 private:
  struct Layer {
    LayerSpec spec;
    int input = -1;                        // producer index (conv/pool/linear/relu)
    int logits_input = -1, label_input = -1;  // softmax loss
    std::vector<std::size_t> feature_dims;    // per-example output dims
    std::vector<NDArray> params;
    std::vector<NDArray> velocity;
    NDArray out;              // [n, feature_dims...]
    NDArray grad;             // d(loss)/d(out), same shape as out
    std::vector<long> route;  // pool: flat input index feeding each output cell
    std::vector<NDArray> param_grads;
  };

  static std::size_t volume(const std::vector<std::size_t>& dims) {
    std::size_t v = 1;
    for (std::size_t d : dims) v *= d;
    return v;
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].spec.name == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("net: unknown layer '" + name + "'");
  }

  void build(std::uint64_t seed) {
    layers_.reserve(spec_.layers.size());
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
      Layer l;
      l.spec = spec_.layers[li];
      Rng stream(derive_seed(seed, kStreamWeights, li));
      switch (l.spec.kind) {
        case LayerKind::Data:
          data_idx_ = static_cast<int>(li);
          l.feature_dims = {l.spec.shape[1], l.spec.shape[2], l.spec.shape[3]};
          break;
        case LayerKind::Label:
          label_idx_ = static_cast<int>(li);
          break;
        case LayerKind::Conv: {
          l.input = index_of(l.spec.inputs[0]);
          const auto& in = layers_[l.input].feature_dims;
          if (in.size() != 3) throw std::invalid_argument("net: conv input must be [c,h,w]");
          const std::size_t c = in[0], h = in[1], w = in[2];
          const std::size_t kh = static_cast<std::size_t>(l.spec.kernel_h);
          const std::size_t kw = static_cast<std::size_t>(l.spec.kernel_w);
          if (kh > h || kw > w) {
            throw std::invalid_argument("net: conv '" + l.spec.name + "' kernel exceeds input");
          }
          const std::size_t f = static_cast<std::size_t>(l.spec.num_filters);
          l.feature_dims = {f, h - kh + 1, w - kw + 1};
          const double fan_in = static_cast<double>(c * kh * kw);
          const double fan_out = static_cast<double>(f * kh * kw);
          const double s = std::sqrt(6.0 / (fan_in + fan_out));
          NDArray kernel({f, c, kh, kw});
          for (double& v : kernel.values()) v = stream.uniform(-s, s);
          l.params = {std::move(kernel), NDArray({f}, 0.0)};
          break;
        }
        case LayerKind::Pool: {
          l.input = index_of(l.spec.inputs[0]);
          const auto& in = layers_[l.input].feature_dims;
          if (in.size() != 3) throw std::invalid_argument("net: pool input must be [c,h,w]");
          const std::size_t h = in[1], w = in[2];
          const std::size_t kh = static_cast<std::size_t>(l.spec.kernel_h);
          const std::size_t kw = static_cast<std::size_t>(l.spec.kernel_w);
          if (kh > h || kw > w) {
            throw std::invalid_argument("net: pool '" + l.spec.name + "' kernel exceeds input");
          }
          const std::size_t oh = (h - kh) / static_cast<std::size_t>(l.spec.stride_h) + 1;
          const std::size_t ow = (w - kw) / static_cast<std::size_t>(l.spec.stride_w) + 1;
          l.feature_dims = {in[0], oh, ow};
          break;
        }
        case LayerKind::Linear: {
          l.input = index_of(l.spec.inputs[0]);
          const std::size_t d = volume(layers_[l.input].feature_dims);
          if (d == 0) throw std::invalid_argument("net: linear input has no features");
          const std::size_t o = static_cast<std::size_t>(l.spec.num_outputs);
          l.feature_dims = {o};
          const double s = std::sqrt(6.0 / (static_cast<double>(d) + static_cast<double>(o)));
          NDArray weight({o, d});
          for (double& v : weight.values()) v = stream.uniform(-s, s);
          l.params = {std::move(weight), NDArray({o}, 0.0)};
          break;
        }
        case LayerKind::Activation:
          l.input = index_of(l.spec.inputs[0]);
          l.feature_dims = layers_[l.input].feature_dims;
          break;
        case LayerKind::SoftmaxWithLoss: {
          loss_idx_ = static_cast<int>(li);
          l.logits_input = index_of(l.spec.inputs[0]);
          l.label_input = index_of(l.spec.inputs[1]);
          if (layers_[l.label_input].spec.kind != LayerKind::Label) {
            throw std::invalid_argument("net: softmax loss second input must be the label layer");
          }
          const auto& in = layers_[l.logits_input].feature_dims;
          if (in.size() != 1) throw std::invalid_argument("net: softmax logits must be [classes]");
          num_classes_ = static_cast<int>(in[0]);
          if (num_classes_ < 1) throw std::invalid_argument("net: need at least one class");
          l.feature_dims = in;  // probabilities
          break;
        }
      }
      for (const NDArray& p : l.params) l.velocity.emplace_back(p.shape(), 0.0);
      layers_.push_back(std::move(l));
    }
  }

  void run_forward(const Batch& batch) {
    const Layer& data = layers_[data_idx_];
    if (batch.images.rank() != 4) throw std::invalid_argument("forward: images must be [n,c,h,w]");
    const std::size_t n = batch.images.extent(0);
    if (n < 1 || batch.labels.size() != n) {
      throw std::invalid_argument("forward: label count does not match batch");
    }
    for (int a = 0; a < 3; ++a) {
      if (batch.images.extent(a + 1) != data.feature_dims[a]) {
        throw std::invalid_argument("forward: batch extents do not match the data layer");
      }
    }
    for (int y : batch.labels) {
      if (y < 0 || y >= num_classes_) throw std::invalid_argument("forward: label out of range");
    }
    batch_size_ = n;
    labels_ = batch.labels;

    for (Layer& l : layers_) {
      switch (l.spec.kind) {
        case LayerKind::Data:
          l.out = batch.images;
          break;
        case LayerKind::Label:
          break;
        case LayerKind::Conv:
          forward_conv(l, layers_[l.input].out, n);
          break;
        case LayerKind::Pool:
          forward_pool(l, layers_[l.input].out, n);
          break;
        case LayerKind::Linear:
          forward_linear(l, layers_[l.input].out, n);
          break;
        case LayerKind::Activation: {
          const NDArray& x = layers_[l.input].out;
          detail::ensure_shape(l.out, x.shape());
          const double* px = x.data();
          double* po = l.out.data();
          for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
          break;
        }
        case LayerKind::SoftmaxWithLoss:
          forward_softmax_loss(l, layers_[l.logits_input].out, n);
          break;
      }
    }
  }

  void forward_conv(Layer& l, const NDArray& x, std::size_t n) {
    const auto& in = layers_[l.input].feature_dims;
    const std::size_t c = in[0], h = in[1], w = in[2];
    const std::size_t f = l.feature_dims[0], oh = l.feature_dims[1], ow = l.feature_dims[2];
    const std::size_t kh = static_cast<std::size_t>(l.spec.kernel_h);
    const std::size_t kw = static_cast<std::size_t>(l.spec.kernel_w);
    detail::ensure_shape(l.out, {n, f, oh, ow});
    const double* ker = l.params[0].data();
    const double* bias = l.params[1].data();
    const double* px = x.data();
    double* po = l.out.data();
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t fi = 0; fi < f; ++fi) {
        double* omap = po + (b * f + fi) * oh * ow;
        const double bv = bias[fi];
        for (std::size_t i = 0; i < oh * ow; ++i) omap[i] = bv;
        for (std::size_t ci = 0; ci < c; ++ci) {
          const double* imap = px + (b * c + ci) * h * w;
          const double* kmap = ker + (fi * c + ci) * kh * kw;
          for (std::size_t u = 0; u < kh; ++u) {
            for (std::size_t v = 0; v < kw; ++v) {
              const double kv = kmap[u * kw + v];
              for (std::size_t i = 0; i < oh; ++i) {
                const double* irow = imap + (i + u) * w + v;
                double* orow = omap + i * ow;
                for (std::size_t j = 0; j < ow; ++j) orow[j] += kv * irow[j];
              }
            }
          }
        }
      }
    }
    l.out.ensure_finite("conv forward");
  }

  void forward_pool(Layer& l, const NDArray& x, std::size_t n) {
    const auto& in = layers_[l.input].feature_dims;
    const std::size_t c = in[0], h = in[1], w = in[2];
    const std::size_t oh = l.feature_dims[1], ow = l.feature_dims[2];
    const std::size_t kh = static_cast<std::size_t>(l.spec.kernel_h);
    const std::size_t kw = static_cast<std::size_t>(l.spec.kernel_w);
    const std::size_t sh = static_cast<std::size_t>(l.spec.stride_h);
    const std::size_t sw = static_cast<std::size_t>(l.spec.stride_w);
    detail::ensure_shape(l.out, {n, c, oh, ow});
    l.route.assign(n * c * oh * ow, 0);
    const double* px = x.data();
    double* po = l.out.data();
    std::size_t m = 0;
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t ci = 0; ci < c; ++ci) {
        const std::size_t base = (b * c + ci) * h * w;
        for (std::size_t i = 0; i < oh; ++i) {
          for (std::size_t j = 0; j < ow; ++j, ++m) {
            // Max over the window; ties keep the lowest flat index so
            // backward routing is deterministic.
            std::size_t best = base + (i * sh) * w + (j * sw);
            double bv = px[best];
            for (std::size_t u = 0; u < kh; ++u) {
              for (std::size_t v = 0; v < kw; ++v) {
                const std::size_t idx = base + (i * sh + u) * w + (j * sw + v);
                if (px[idx] > bv) {
                  bv = px[idx];
                  best = idx;
                }
              }
            }
            po[m] = bv;
            l.route[m] = static_cast<long>(best);
          }
        }
      }
    }
  }

  void forward_linear(Layer& l, const NDArray& x, std::size_t n) {
    const std::size_t d = volume(layers_[l.input].feature_dims);
    const std::size_t o = l.feature_dims[0];
    detail::ensure_shape(l.out, {n, o});
    const double* weight = l.params[0].data();
    const double* bias = l.params[1].data();
    const double* px = x.data();
    double* po = l.out.data();
    for (std::size_t b = 0; b < n; ++b) {
      const double* xrow = px + b * d;
      double* orow = po + b * o;
      for (std::size_t oi = 0; oi < o; ++oi) {
        const double* wrow = weight + oi * d;
        double acc = bias[oi];
        for (std::size_t di = 0; di < d; ++di) acc += wrow[di] * xrow[di];
        orow[oi] = acc;
      }
    }
    l.out.ensure_finite("linear forward");
  }

  void forward_softmax_loss(Layer& l, const NDArray& logits, std::size_t n) {
    const std::size_t c = static_cast<std::size_t>(num_classes_);
    detail::ensure_shape(l.out, {n, c});
    const double* px = logits.data();
    double* pp = l.out.data();
    double loss = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double* row = px + b * c;
      double mx = row[0];
      for (std::size_t j = 1; j < c; ++j) mx = row[j] > mx ? row[j] : mx;
      double sum = 0.0;
      double* prow = pp + b * c;
      for (std::size_t j = 0; j < c; ++j) {
        prow[j] = std::exp(row[j] - mx);
        sum += prow[j];
      }
      for (std::size_t j = 0; j < c; ++j) prow[j] /= sum;
      const int y = labels_[b];
      loss -= (row[static_cast<std::size_t>(y)] - mx) - std::log(sum);
    }
    last_loss_ = loss / static_cast<double>(n);
    if (!std::isfinite(last_loss_)) throw std::runtime_error("softmax loss: non-finite loss");
  }

  WeightCollection run_backward() {
    const std::size_t n = batch_size_;
    for (Layer& l : layers_) {
      if (l.spec.kind == LayerKind::Label) continue;
      detail::ensure_shape(l.grad, l.out.shape());
      detail::zero(l.grad);
      l.param_grads.clear();
      for (const NDArray& p : l.params) l.param_grads.emplace_back(p.shape(), 0.0);
    }

    // Seed: d(mean loss)/d(logits) = (p - onehot) / n.
    {
      Layer& loss = layers_[loss_idx_];
      Layer& logits = layers_[loss.logits_input];
      const std::size_t c = static_cast<std::size_t>(num_classes_);
      const double* pp = loss.out.data();
      double* pg = logits.grad.data();
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t j = 0; j < c; ++j) pg[b * c + j] = pp[b * c + j] * inv_n;
        pg[b * c + static_cast<std::size_t>(labels_[b])] -= inv_n;
      }
    }

    for (std::size_t li = layers_.size(); li-- > 0;) {
      Layer& l = layers_[li];
      switch (l.spec.kind) {
        case LayerKind::Data:
        case LayerKind::Label:
        case LayerKind::SoftmaxWithLoss:
          break;
        case LayerKind::Activation: {
          Layer& src = layers_[l.input];
          const double* px = src.out.data();
          const double* pg = l.grad.data();
          double* pd = src.grad.data();
          for (std::size_t i = 0; i < l.grad.size(); ++i) pd[i] += px[i] > 0.0 ? pg[i] : 0.0;
          break;
        }
        case LayerKind::Pool: {
          Layer& src = layers_[l.input];
          const double* pg = l.grad.data();
          double* pd = src.grad.data();
          for (std::size_t m = 0; m < l.grad.size(); ++m) pd[l.route[m]] += pg[m];
          break;
        }
        case LayerKind::Linear:
          backward_linear(l, n);
          break;
        case LayerKind::Conv:
          backward_conv(l, n);
          break;
      }
    }

    WeightCollection grads;
    for (Layer& l : layers_) {
      for (NDArray& g : l.param_grads) g.ensure_finite("backward");
      grads.add(l.spec.name, l.param_grads);
    }
    return grads;
  }

  void backward_linear(Layer& l, std::size_t n) {
    Layer& src = layers_[l.input];
    const std::size_t d = volume(src.feature_dims);
    const std::size_t o = l.feature_dims[0];
    const double* weight = l.params[0].data();
    const double* px = src.out.data();
    const double* pg = l.grad.data();
    double* dw = l.param_grads[0].data();
    double* db = l.param_grads[1].data();
    double* dx = src.grad.data();
    for (std::size_t b = 0; b < n; ++b) {
      const double* xrow = px + b * d;
      const double* grow = pg + b * o;
      double* dxrow = dx + b * d;
      for (std::size_t oi = 0; oi < o; ++oi) {
        const double g = grow[oi];
        if (g == 0.0) continue;
        db[oi] += g;
        double* dwrow = dw + oi * d;
        const double* wrow = weight + oi * d;
        for (std::size_t di = 0; di < d; ++di) {
          dwrow[di] += g * xrow[di];
          dxrow[di] += g * wrow[di];
        }
      }
    }
  }

  void backward_conv(Layer& l, std::size_t n) {
    Layer& src = layers_[l.input];
    const auto& in = src.feature_dims;
    const std::size_t c = in[0], h = in[1], w = in[2];
    const std::size_t f = l.feature_dims[0], oh = l.feature_dims[1], ow = l.feature_dims[2];
    const std::size_t kh = static_cast<std::size_t>(l.spec.kernel_h);
    const std::size_t kw = static_cast<std::size_t>(l.spec.kernel_w);
    const double* ker = l.params[0].data();
    const double* px = src.out.data();
    const double* pg = l.grad.data();
    double* dker = l.param_grads[0].data();
    double* dbias = l.param_grads[1].data();
    double* dx = src.grad.data();
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t fi = 0; fi < f; ++fi) {
        const double* gmap = pg + (b * f + fi) * oh * ow;
        for (std::size_t i = 0; i < oh * ow; ++i) dbias[fi] += gmap[i];
        for (std::size_t ci = 0; ci < c; ++ci) {
          const double* imap = px + (b * c + ci) * h * w;
          double* dmap = dx + (b * c + ci) * h * w;
          const double* kmap = ker + (fi * c + ci) * kh * kw;
          double* dkmap = dker + (fi * c + ci) * kh * kw;
          for (std::size_t u = 0; u < kh; ++u) {
            for (std::size_t v = 0; v < kw; ++v) {
              const double kv = kmap[u * kw + v];
              double acc = 0.0;
              for (std::size_t i = 0; i < oh; ++i) {
                const double* grow = gmap + i * ow;
                const double* irow = imap + (i + u) * w + v;
                double* drow = dmap + (i + u) * w + v;
                for (std::size_t j = 0; j < ow; ++j) {
                  acc += grow[j] * irow[j];
                  drow[j] += grow[j] * kv;
                }
              }
              dkmap[u * kw + v] += acc;
            }
          }
        }
      }
    }
  }

  NetSpec spec_;
  std::vector<Layer> layers_;
  int data_idx_ = -1, label_idx_ = -1, loss_idx_ = -1;
  int num_classes_ = 0;
  SgdOptions sgd_;
  std::shared_ptr<BatchIterator> train_data_;
  std::shared_ptr<BatchIterator> val_data_;
  std::size_t batch_size_ = 0;
  std::vector<int> labels_;
  double last_loss_ = 0.0;
};

}  // namespace parasgd
