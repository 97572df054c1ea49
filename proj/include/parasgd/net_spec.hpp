#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace parasgd {

enum class LayerKind { Data, Label, Conv, Pool, Linear, Activation, SoftmaxWithLoss };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Data: return "data";
    case LayerKind::Label: return "label";
    case LayerKind::Conv: return "conv";
    case LayerKind::Pool: return "pool";
    case LayerKind::Linear: return "linear";
    case LayerKind::Activation: return "relu";
    case LayerKind::SoftmaxWithLoss: return "softmax";
  }
  return "?";
}

/// One declarative layer. Which fields are meaningful depends on `kind`;
/// the factory helpers below fill them in consistently.
struct LayerSpec {
  LayerKind kind = LayerKind::Data;
  std::string name;
  std::vector<std::string> inputs;

  std::vector<std::size_t> shape;  // data: [batch, c, h, w]; label: [batch, 1]
  int kernel_h = 0, kernel_w = 0;  // conv, pool
  int num_filters = 0;             // conv
  int stride_h = 1, stride_w = 1;  // pool (max pooling only)
  int num_outputs = 0;             // linear
};

inline LayerSpec data_layer(std::string name, std::size_t batch, std::size_t c, std::size_t h,
                            std::size_t w) {
  LayerSpec s;
  s.kind = LayerKind::Data;
  s.name = std::move(name);
  s.shape = {batch, c, h, w};
  return s;
}

inline LayerSpec label_layer(std::string name, std::size_t batch) {
  LayerSpec s;
  s.kind = LayerKind::Label;
  s.name = std::move(name);
  s.shape = {batch, 1};
  return s;
}

inline LayerSpec conv_layer(std::string name, std::string input, int kh, int kw, int num_filters) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.name = std::move(name);
  s.inputs = {std::move(input)};
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.num_filters = num_filters;
  return s;
}

inline LayerSpec pool_layer(std::string name, std::string input, int kh, int kw, int sh, int sw) {
  LayerSpec s;
  s.kind = LayerKind::Pool;
  s.name = std::move(name);
  s.inputs = {std::move(input)};
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.stride_h = sh;
  s.stride_w = sw;
  return s;
}

inline LayerSpec linear_layer(std::string name, std::string input, int num_outputs) {
  LayerSpec s;
  s.kind = LayerKind::Linear;
  s.name = std::move(name);
  s.inputs = {std::move(input)};
  s.num_outputs = num_outputs;
  return s;
}

inline LayerSpec relu_layer(std::string name, std::string input) {
  LayerSpec s;
  s.kind = LayerKind::Activation;
  s.name = std::move(name);
  s.inputs = {std::move(input)};
  return s;
}

inline LayerSpec softmax_loss_layer(std::string name, std::string logits, std::string label) {
  LayerSpec s;
  s.kind = LayerKind::SoftmaxWithLoss;
  s.name = std::move(name);
  s.inputs = {std::move(logits), std::move(label)};
  return s;
}

/// Declarative layer graph. Layers are listed in topological order: every
/// referenced input must appear earlier in the list.
struct NetSpec {
  std::vector<LayerSpec> layers;

  /// Structural validation shared by programmatic construction and the
  /// config-file parser. Shape inference happens later, when a Net is built.
  void validate() const {
    std::set<std::string> seen;
    int n_data = 0, n_label = 0, n_loss = 0;
    for (const LayerSpec& l : layers) {
      if (l.name.empty()) throw std::invalid_argument("net: layer with empty name");
      if (!seen.insert(l.name).second) {
        throw std::invalid_argument("net: duplicate layer name '" + l.name + "'");
      }
      for (const std::string& in : l.inputs) {
        if (!seen.contains(in)) {
          throw std::invalid_argument("net: layer '" + l.name + "' references '" + in +
                                      "' which is not declared earlier");
        }
      }
      switch (l.kind) {
        case LayerKind::Data:
          ++n_data;
          if (l.shape.size() != 4) throw std::invalid_argument("net: data layer needs [b,c,h,w]");
          break;
        case LayerKind::Label:
          ++n_label;
          if (l.shape.size() != 2 || l.shape[1] != 1) {
            throw std::invalid_argument("net: label layer needs [b,1]");
          }
          break;
        case LayerKind::Conv:
          if (l.inputs.size() != 1) throw std::invalid_argument("net: conv takes one input");
          if (l.kernel_h < 1 || l.kernel_w < 1 || l.num_filters < 1) {
            throw std::invalid_argument("net: conv '" + l.name + "' has non-positive geometry");
          }
          break;
        case LayerKind::Pool:
          if (l.inputs.size() != 1) throw std::invalid_argument("net: pool takes one input");
          if (l.kernel_h < 1 || l.kernel_w < 1 || l.stride_h < 1 || l.stride_w < 1) {
            throw std::invalid_argument("net: pool '" + l.name + "' has non-positive geometry");
          }
          break;
        case LayerKind::Linear:
          if (l.inputs.size() != 1) throw std::invalid_argument("net: linear takes one input");
          if (l.num_outputs < 1) {
            throw std::invalid_argument("net: linear '" + l.name + "' needs positive outputs");
          }
          break;
        case LayerKind::Activation:
          if (l.inputs.size() != 1) throw std::invalid_argument("net: relu takes one input");
          break;
        case LayerKind::SoftmaxWithLoss:
          ++n_loss;
          if (l.inputs.size() != 2) {
            throw std::invalid_argument("net: softmax loss takes [logits, label]");
          }
          break;
      }
    }
    if (n_data != 1) throw std::invalid_argument("net: exactly one data layer required");
    if (n_label != 1) throw std::invalid_argument("net: exactly one label layer required");
    if (n_loss != 1) throw std::invalid_argument("net: exactly one softmax loss layer required");
  }

  const LayerSpec& data_spec() const {
    for (const LayerSpec& l : layers) {
      if (l.kind == LayerKind::Data) return l;
    }
    throw std::logic_error("net: no data layer");
  }
};

/// Two-conv LeNet-style graph sized for desk experiments: 8 and 16 filters,
/// 64 hidden units. Input must be at least 16x16 for the 5x5 kernels and
/// 2x2/2 pools to leave a positive spatial extent.
inline NetSpec make_lenet_small(std::size_t batch, std::size_t c, std::size_t h, std::size_t w,
                                int num_classes) {
  NetSpec net;
  net.layers = {
      data_layer("data", batch, c, h, w),
      label_layer("label", batch),
      conv_layer("conv1", "data", 5, 5, 8),
      pool_layer("pool1", "conv1", 2, 2, 2, 2),
      conv_layer("conv2", "pool1", 5, 5, 16),
      pool_layer("pool2", "conv2", 2, 2, 2, 2),
      linear_layer("ip1", "pool2", 64),
      relu_layer("relu1", "ip1"),
      linear_layer("ip2", "relu1", num_classes),
      softmax_loss_layer("loss", "ip2", "label"),
  };
  net.validate();
  return net;
}

/// linear-ReLU-linear classifier.
inline NetSpec make_mlp(std::size_t batch, std::size_t c, std::size_t h, std::size_t w,
                        int num_classes, int hidden = 64) {
  NetSpec net;
  net.layers = {
      data_layer("data", batch, c, h, w),
      label_layer("label", batch),
      linear_layer("ip1", "data", hidden),
      relu_layer("relu1", "ip1"),
      linear_layer("ip2", "relu1", num_classes),
      softmax_loss_layer("loss", "ip2", "label"),
  };
  net.validate();
  return net;
}

}  // namespace parasgd
