#pragma once

#include <memory>
#include <vector>

#include "parasgd/tensor.hpp"

namespace parasgd {

/// One minibatch: images [n, channels, h, w] plus integer labels of length n.
struct Batch {
  NDArray images;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Cycling source of batches. Implementations own their position state and
/// are confined to a single consumer at a time.
class BatchIterator {
 public:
  virtual ~BatchIterator() = default;
  virtual Batch next() = 0;
  virtual std::unique_ptr<BatchIterator> clone() const = 0;
};

}  // namespace parasgd
