#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace parasgd {

/// Dense row-major tensor of doubles. Shapes are explicit, there are no
/// views or strides; slicing copies. Every operation that produces values
/// rejects non-finite results so a diverging optimization fails loudly
/// instead of propagating NaNs through an experiment.
class NDArray {
 public:
  NDArray() = default;

  /// Fill constructor.
  NDArray(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {
    if (!std::isfinite(fill)) throw std::invalid_argument("NDArray: non-finite fill value");
  }

  /// Contents constructor; values are row-major and must match the shape exactly.
  NDArray(std::vector<std::size_t> shape, std::vector<double> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != checked_size(shape_)) {
      throw std::invalid_argument("NDArray: value count " + std::to_string(data_.size()) +
                                  " does not match shape volume " +
                                  std::to_string(checked_size(shape_)));
    }
    ensure_finite("NDArray construction");
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  bool same_shape(const NDArray& other) const noexcept { return shape_ == other.shape_; }

  /// Exact (bitwise on values) equality; used by determinism checks.
  bool operator==(const NDArray& other) const noexcept {
    return shape_ == other.shape_ && data_ == other.data_;
  }

  /// In-place w += factor * g. Single-owner update path for SGD.
  void add_scaled_in_place(const NDArray& g, double factor) {
    require_same_shape(g, "add_scaled_in_place");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += factor * g.data_[i];
    ensure_finite("add_scaled_in_place");
  }

  /// In-place v = decay * v + g. Momentum accumulator update.
  void decay_add_in_place(const NDArray& g, double decay) {
    require_same_shape(g, "decay_add_in_place");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = decay * data_[i] + g.data_[i];
    ensure_finite("decay_add_in_place");
  }

  void fill(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("NDArray::fill: non-finite value");
    for (double& x : data_) x = v;
  }

  void ensure_finite(const char* what) const {
    for (double v : data_) {
      if (!std::isfinite(v)) {
        throw std::runtime_error(std::string(what) + ": produced a non-finite value");
      }
    }
  }

  void require_same_shape(const NDArray& other, const char* what) const {
    if (!same_shape(other)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("NDArray: empty shape");
    std::size_t n = 1;
    for (std::size_t e : shape) {
      if (e == 0) throw std::invalid_argument("NDArray: zero extent");
      n *= e;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

enum class ElementwiseOp { Add, Sub, Mul };

inline NDArray elementwise(const NDArray& a, const NDArray& b, ElementwiseOp op) {
  a.require_same_shape(b, "elementwise");
  NDArray out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  switch (op) {
    case ElementwiseOp::Add:
      for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] + pb[i];
      break;
    case ElementwiseOp::Sub:
      for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] - pb[i];
      break;
    case ElementwiseOp::Mul:
      for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * pb[i];
      break;
  }
  out.ensure_finite("elementwise");
  return out;
}

inline NDArray add(const NDArray& a, const NDArray& b) { return elementwise(a, b, ElementwiseOp::Add); }
inline NDArray sub(const NDArray& a, const NDArray& b) { return elementwise(a, b, ElementwiseOp::Sub); }
inline NDArray mul(const NDArray& a, const NDArray& b) { return elementwise(a, b, ElementwiseOp::Mul); }

inline NDArray scale(const NDArray& a, double c) {
  NDArray out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * c;
  out.ensure_finite("scale");
  return out;
}

/// Standard matrix product of two rank-2 tensors [m,k] x [k,n] -> [m,n].
inline NDArray matmul(const NDArray& a, const NDArray& b) {
  if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul: operands must be rank-2");
  const std::size_t m = a.extent(0), k = a.extent(1);
  const std::size_t k2 = b.extent(0), n = b.extent(1);
  if (k != k2) throw std::invalid_argument("matmul: inner extents disagree");
  NDArray out({m, n}, 0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  out.ensure_finite("matmul");
  return out;
}

/// Entrywise arithmetic mean of a nonempty set of same-shape tensors.
/// Accumulation order follows the input order, which synchronization code
/// relies on for bit-reproducible averaging.
inline NDArray mean_collection(std::span<const NDArray> items) {
  if (items.empty()) throw std::invalid_argument("mean_collection: empty input");
  NDArray acc(items[0].shape(), 0.0);
  for (const NDArray& t : items) {
    t.require_same_shape(acc, "mean_collection");
    double* pa = acc.data();
    const double* pt = t.data();
    for (std::size_t i = 0; i < acc.size(); ++i) pa[i] += pt[i];
  }
  const double k = static_cast<double>(items.size());
  for (double& v : acc.values()) v /= k;
  acc.ensure_finite("mean_collection");
  return acc;
}

inline NDArray mean_collection(const std::vector<NDArray>& items) {
  return mean_collection(std::span<const NDArray>(items.data(), items.size()));
}

/// Per-row index of the maximum of a rank-2 tensor; ties break toward the
/// lowest index so downstream accuracy counts are deterministic.
inline std::vector<int> argmax_rows(const NDArray& a) {
  if (a.rank() != 2) throw std::invalid_argument("argmax_rows: operand must be rank-2");
  const std::size_t n = a.extent(0), c = a.extent(1);
  std::vector<int> out(n, 0);
  const double* p = a.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = p + i * c;
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

inline NDArray identity_matrix(std::size_t n) {
  NDArray out({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i * n + i] = 1.0;
  return out;
}

}  // namespace parasgd
