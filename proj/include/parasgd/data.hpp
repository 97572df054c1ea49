#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parasgd/batch.hpp"
#include "parasgd/rng.hpp"
#include "parasgd/tensor.hpp"

namespace parasgd {

/// An in-memory labeled dataset. Immutable after construction and shareable
/// read-only across workers.
struct Dataset {
  NDArray images;           // [n, channels, h, w]
  std::vector<int> labels;  // length n, values in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t channels() const { return images.extent(1); }
  std::size_t height() const { return images.extent(2); }
  std::size_t width() const { return images.extent(3); }

  void validate() const {
    if (labels.empty()) throw std::invalid_argument("dataset: empty");
    if (images.rank() != 4 || images.extent(0) != labels.size()) {
      throw std::invalid_argument("dataset: images/labels mismatch");
    }
    if (num_classes < 1) throw std::invalid_argument("dataset: no classes");
    for (int y : labels) {
      if (y < 0 || y >= num_classes) throw std::invalid_argument("dataset: label out of range");
    }
  }
};

/// A contiguous slice of a shuffled index permutation, assigned to one worker.
struct Shard {
  const Dataset* dataset = nullptr;
  std::vector<std::size_t> indices;  // rows of `dataset` owned by this worker
  int worker_id = 0;

  std::size_t size() const { return indices.size(); }
};

namespace detail {

// Smooth random pattern: white noise on a coarse node grid, bilinearly
// upsampled per channel. Smoothness gives class means (and the structured
// part of the within-class variation) the local spatial structure that
// convolutional models key on; plain white-noise directions would be
// invisible to them. With `unit_pixel_variance` every pixel is rescaled by
// its interpolation weights so its variance is exactly 1.
inline std::vector<double> smooth_pattern(Rng& rng, std::size_t channels, std::size_t height,
                                          std::size_t width, bool unit_pixel_variance = false) {
  const std::size_t gh = std::max<std::size_t>(1, height / 4);
  const std::size_t gw = std::max<std::size_t>(1, width / 4);
  std::vector<double> pattern(channels * height * width);
  std::vector<double> nodes((gh + 1) * (gw + 1));
  auto cell = [](std::size_t i, std::size_t extent, std::size_t grid) {
    const double f = extent > 1 ? static_cast<double>(i) * static_cast<double>(grid) /
                                      static_cast<double>(extent - 1)
                                : 0.0;
    std::size_t lo = std::min<std::size_t>(static_cast<std::size_t>(f), grid - 1);
    return std::pair<std::size_t, double>(lo, f - static_cast<double>(lo));
  };
  for (std::size_t c = 0; c < channels; ++c) {
    for (double& v : nodes) v = rng.normal();
    for (std::size_t y = 0; y < height; ++y) {
      const auto [y0, ty] = cell(y, height, gh);
      for (std::size_t x = 0; x < width; ++x) {
        const auto [x0, tx] = cell(x, width, gw);
        const double w00 = (1.0 - ty) * (1.0 - tx), w01 = (1.0 - ty) * tx;
        const double w10 = ty * (1.0 - tx), w11 = ty * tx;
        double v = w00 * nodes[y0 * (gw + 1) + x0] + w01 * nodes[y0 * (gw + 1) + x0 + 1] +
                   w10 * nodes[(y0 + 1) * (gw + 1) + x0] +
                   w11 * nodes[(y0 + 1) * (gw + 1) + x0 + 1];
        if (unit_pixel_variance) {
          v /= std::sqrt(w00 * w00 + w01 * w01 + w10 * w10 + w11 * w11);
        }
        pattern[(c * height + y) * width + x] = v;
      }
    }
  }
  return pattern;
}

// Fraction of the within-class variance carried by smooth (spatially
// correlated) variation rather than independent pixel noise. Mirrors how
// examples of one image class differ by coherent structure, which is what
// makes minibatch gradients noisy while accuracy is still climbing.
inline constexpr double kStructuredNoise = 0.7;

}  // namespace detail

/// Gaussian class clusters: one smooth random unit pattern per class scaled
/// so the expected distance between class means equals `separation`, plus
/// zero-mean Gaussian within-class variation with variance exactly 1 per
/// pixel (a mix of spatially smooth structure and independent pixel noise).
/// separation=0 makes classes indistinguishable.
///
/// The class means depend only on the seed; `variant` selects an independent
/// noise stream, so variant 0 and variant 1 of one seed are a matched
/// train/test pair from the same distribution.
inline Dataset generate_synthetic(int num_classes, std::size_t channels, std::size_t height,
                                  std::size_t width, std::size_t per_class, double separation,
                                  std::uint64_t seed, std::uint64_t variant = 0) {
  if (num_classes < 1) throw std::invalid_argument("synthetic: need at least one class");
  if (per_class < 1) throw std::invalid_argument("synthetic: need at least one example per class");
  if (separation < 0.0) throw std::invalid_argument("synthetic: negative separation");
  const std::size_t dim = channels * height * width;
  Rng mean_stream(derive_seed(seed, kStreamData, 0x4d45414eULL));
  Rng noise_stream(derive_seed(seed, kStreamData, 0x4e4f495345ULL, variant));

  std::vector<std::vector<double>> means;
  means.reserve(static_cast<std::size_t>(num_classes));
  const double radius = separation / std::sqrt(2.0);
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<double> mu = detail::smooth_pattern(mean_stream, channels, height, width);
    double norm2 = 0.0;
    for (double v : mu) norm2 += v * v;
    const double inv = norm2 > 0.0 ? radius / std::sqrt(norm2) : 0.0;
    for (double& v : mu) v *= inv;
    means.push_back(std::move(mu));
  }

  const std::size_t n = static_cast<std::size_t>(num_classes) * per_class;
  NDArray images({n, channels, height, width});
  std::vector<int> labels(n);
  double* px = images.data();
  const double smooth_scale = detail::kStructuredNoise;
  const double white_scale = std::sqrt(1.0 - smooth_scale * smooth_scale);
  std::size_t row = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    const std::vector<double>& mu = means[static_cast<std::size_t>(cls)];
    for (std::size_t e = 0; e < per_class; ++e, ++row) {
      labels[row] = cls;
      double* dst = px + row * dim;
      const std::vector<double> structure =
          detail::smooth_pattern(noise_stream, channels, height, width, true);
      for (std::size_t d = 0; d < dim; ++d) {
        dst[d] = mu[d] + smooth_scale * structure[d] + white_scale * noise_stream.normal();
      }
    }
  }
  Dataset ds{std::move(images), std::move(labels), num_classes};
  ds.validate();
  return ds;
}

inline Dataset generate_synthetic(int num_classes, std::size_t dim, std::size_t per_class,
                                  double separation, std::uint64_t seed, std::uint64_t variant = 0) {
  return generate_synthetic(num_classes, 1, 1, dim, per_class, separation, seed, variant);
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw std::runtime_error("idx: truncated header in " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace detail

/// IDX pair loader (big-endian, unsigned-byte payload): rank-3 image file
/// [n,h,w] with magic 0x00000803 and rank-1 label file with magic 0x00000801.
/// Pixels are rescaled to [0,1] as p/255 exactly.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("idx: cannot open " + images_path);
  if (detail::read_be32(img, images_path) != 0x00000803u) {
    throw std::runtime_error("idx: bad image magic in " + images_path);
  }
  const std::uint32_t n = detail::read_be32(img, images_path);
  const std::uint32_t h = detail::read_be32(img, images_path);
  const std::uint32_t w = detail::read_be32(img, images_path);
  if (n == 0 || h == 0 || w == 0) throw std::runtime_error("idx: zero dimension in " + images_path);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(n) * h * w);
  img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!img) throw std::runtime_error("idx: truncated image data in " + images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);
  if (detail::read_be32(lab, labels_path) != 0x00000801u) {
    throw std::runtime_error("idx: bad label magic in " + labels_path);
  }
  const std::uint32_t ln = detail::read_be32(lab, labels_path);
  if (ln != n) throw std::runtime_error("idx: image/label count mismatch");
  std::vector<unsigned char> raw_labels(ln);
  lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(ln));
  if (!lab) throw std::runtime_error("idx: truncated label data in " + labels_path);

  NDArray images({n, 1, h, w});
  double* px = images.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) px[i] = static_cast<double>(pixels[i]) / 255.0;
  std::vector<int> labels(ln);
  int max_label = 0;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    labels[i] = static_cast<int>(raw_labels[i]);
    max_label = labels[i] > max_label ? labels[i] : max_label;
  }
  Dataset ds{std::move(images), std::move(labels), max_label + 1};
  ds.validate();
  return ds;
}

/// Header-less CSV rows of the form `label,p0,p1,...` with one row per
/// example. Pixel count per row must equal channels*h*w; pixels are rescaled
/// to p/255 exactly, labels range-checked against num_classes.
inline Dataset load_csv(const std::string& path, std::size_t channels, std::size_t height,
                        std::size_t width, int num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  const std::size_t dim = channels * height * width;
  std::vector<double> values;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    if (!std::getline(row, cell, ',')) continue;
    const int label = std::stoi(cell);
    if (label < 0 || label >= num_classes) {
      throw std::runtime_error("csv: label " + std::to_string(label) + " out of range at line " +
                               std::to_string(line_no) + " of " + path);
    }
    labels.push_back(label);
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::stod(cell) / 255.0);
      ++count;
    }
    if (count != dim) {
      throw std::runtime_error("csv: expected " + std::to_string(dim) + " pixels, got " +
                               std::to_string(count) + " at line " + std::to_string(line_no));
    }
  }
  if (labels.empty()) throw std::runtime_error("csv: no rows in " + path);
  NDArray images({labels.size(), channels, height, width}, std::move(values));
  Dataset ds{std::move(images), std::move(labels), num_classes};
  ds.validate();
  return ds;
}

/// Deterministic shuffle followed by a contiguous split into K index ranges
/// whose sizes differ by at most one. The permutation depends only on the
/// seed, so the K=1 "shard" of a dataset is the same shuffled sequence every
/// scheme sees.
inline std::vector<Shard> shard(const Dataset& dataset, int workers, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (workers < 1) throw std::invalid_argument("shard: need at least one worker");
  if (static_cast<std::size_t>(workers) > n) {
    throw std::invalid_argument("shard: more workers than examples");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kStreamShard));
  rng.shuffle(perm);

  std::vector<Shard> shards;
  shards.reserve(static_cast<std::size_t>(workers));
  const std::size_t base = n / static_cast<std::size_t>(workers);
  const std::size_t extra = n % static_cast<std::size_t>(workers);
  std::size_t pos = 0;
  for (int k = 0; k < workers; ++k) {
    const std::size_t len = base + (static_cast<std::size_t>(k) < extra ? 1 : 0);
    Shard s;
    s.dataset = &dataset;
    s.worker_id = k;
    s.indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                     perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    shards.push_back(std::move(s));
  }
  return shards;
}

namespace detail {

inline Batch gather_batch(const Dataset& ds, const std::size_t* idx, std::size_t b) {
  const std::size_t dim = ds.channels() * ds.height() * ds.width();
  NDArray images({b, ds.channels(), ds.height(), ds.width()});
  std::vector<int> labels(b);
  const double* src = ds.images.data();
  double* dst = images.data();
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = src + idx[i] * dim;
    for (std::size_t d = 0; d < dim; ++d) dst[i * dim + d] = row[d];
    labels[i] = ds.labels[idx[i]];
  }
  return Batch{std::move(images), std::move(labels)};
}

}  // namespace detail

/// Cycling training iterator over one shard. Each epoch reshuffles the shard
/// with a stream derived from (seed, epoch) and emits floor(size/b) batches;
/// the final partial batch of an epoch is dropped so every step costs the
/// same simulated time.
class ShardBatchIterator final : public BatchIterator {
 public:
  ShardBatchIterator(Shard shard, std::size_t batch_size, std::uint64_t seed)
      : shard_(std::move(shard)), batch_(batch_size), seed_(seed) {
    if (batch_ < 1) throw std::invalid_argument("batch iterator: batch size must be >= 1");
    if (batch_ > shard_.size()) {
      throw std::invalid_argument("batch iterator: batch size exceeds shard size");
    }
    start_epoch();
  }

  Batch next() override {
    if ((cursor_ + 1) * batch_ > order_.size()) {
      ++epoch_;
      start_epoch();
    }
    Batch b = detail::gather_batch(*shard_.dataset, order_.data() + cursor_ * batch_, batch_);
    ++cursor_;
    return b;
  }

  std::unique_ptr<BatchIterator> clone() const override {
    return std::make_unique<ShardBatchIterator>(*this);
  }

 private:
  void start_epoch() {
    order_ = shard_.indices;
    Rng rng(derive_seed(seed_, epoch_));
    rng.shuffle(order_);
    cursor_ = 0;
  }

  Shard shard_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Fixed-order cycling iterator used for evaluation: no shuffling, so every
/// pass over the validation set scores the same examples in the same order.
class SequentialBatchIterator final : public BatchIterator {
 public:
  SequentialBatchIterator(const Dataset& dataset, std::size_t batch_size)
      : dataset_(&dataset), batch_(batch_size) {
    if (batch_ < 1 || batch_ > dataset.size()) {
      throw std::invalid_argument("eval iterator: bad batch size");
    }
    indices_.resize(dataset.size());
    std::iota(indices_.begin(), indices_.end(), std::size_t{0});
  }

  Batch next() override {
    if ((cursor_ + 1) * batch_ > indices_.size()) cursor_ = 0;
    Batch b = detail::gather_batch(*dataset_, indices_.data() + cursor_ * batch_, batch_);
    ++cursor_;
    return b;
  }

  std::unique_ptr<BatchIterator> clone() const override {
    return std::make_unique<SequentialBatchIterator>(*this);
  }

 private:
  const Dataset* dataset_;
  std::size_t batch_;
  std::vector<std::size_t> indices_;
  std::size_t cursor_ = 0;
};

/// Seed for worker k's batch stream. Epoch mixing happens inside the
/// iterator; both use the same stated 64-bit mixer.
inline std::uint64_t worker_stream_seed(std::uint64_t global_seed, int worker_id) {
  return derive_seed(global_seed, kStreamWorker, static_cast<std::uint64_t>(worker_id));
}

/// Convenience: worker k's training iterator for a given sharding.
inline std::shared_ptr<BatchIterator> make_worker_iterator(const std::vector<Shard>& shards,
                                                           int worker_id, std::size_t batch_size,
                                                           std::uint64_t global_seed) {
  return std::make_shared<ShardBatchIterator>(shards.at(static_cast<std::size_t>(worker_id)),
                                              batch_size,
                                              worker_stream_seed(global_seed, worker_id));
}

}  // namespace parasgd
