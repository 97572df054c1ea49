#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "parasgd/tensor.hpp"

namespace parasgd {

/// Ordered association from layer name to that layer's learnable tensors
/// (for example {kernel, bias}; empty for parameterless layers). This is the
/// unit of exchange at every synchronization point, so key order is fixed by
/// the producing network and averaging accumulates in the order given.
class WeightCollection {
 public:
  using Entry = std::pair<std::string, std::vector<NDArray>>;

  void add(std::string name, std::vector<NDArray> tensors) {
    entries_.emplace_back(std::move(name), std::move(tensors));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const Entry& entry(std::size_t i) const { return entries_.at(i); }
  Entry& entry(std::size_t i) { return entries_.at(i); }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  const std::vector<NDArray>* find(const std::string& name) const noexcept {
    for (const Entry& e : entries_) {
      if (e.first == name) return &e.second;
    }
    return nullptr;
  }

  bool same_structure(const WeightCollection& other) const noexcept {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].first != other.entries_[i].first) return false;
      if (entries_[i].second.size() != other.entries_[i].second.size()) return false;
      for (std::size_t t = 0; t < entries_[i].second.size(); ++t) {
        if (!entries_[i].second[t].same_shape(other.entries_[i].second[t])) return false;
      }
    }
    return true;
  }

  bool operator==(const WeightCollection& other) const noexcept {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].first != other.entries_[i].first) return false;
      if (entries_[i].second != other.entries_[i].second) return false;
    }
    return true;
  }

  /// FNV-1a over the raw bytes of every value, in storage order. Used to
  /// fingerprint weight states in traces and determinism checks.
  std::uint64_t digest() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* p, std::size_t n) {
      const unsigned char* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ULL;
      }
    };
    for (const Entry& e : entries_) {
      mix_bytes(e.first.data(), e.first.size());
      for (const NDArray& t : e.second) {
        mix_bytes(t.data(), t.size() * sizeof(double));
      }
    }
    return h;
  }

 private:
  std::vector<Entry> entries_;
};

/// Entrywise mean of same-structure collections, accumulated in ascending
/// input order so sequential and threaded drivers produce identical bits.
inline WeightCollection weights_mean(std::span<const WeightCollection> items) {
  if (items.empty()) throw std::invalid_argument("weights_mean: empty input");
  for (const WeightCollection& w : items) {
    if (!w.same_structure(items[0])) throw std::invalid_argument("weights_mean: structure mismatch");
  }
  WeightCollection out;
  for (std::size_t e = 0; e < items[0].size(); ++e) {
    std::vector<NDArray> tensors;
    for (std::size_t t = 0; t < items[0].entry(e).second.size(); ++t) {
      std::vector<NDArray> slots;
      slots.reserve(items.size());
      for (const WeightCollection& w : items) slots.push_back(w.entry(e).second[t]);
      tensors.push_back(mean_collection(slots));
    }
    out.add(items[0].entry(e).first, std::move(tensors));
  }
  return out;
}

inline WeightCollection weights_mean(const std::vector<WeightCollection>& items) {
  return weights_mean(std::span<const WeightCollection>(items.data(), items.size()));
}

}  // namespace parasgd
