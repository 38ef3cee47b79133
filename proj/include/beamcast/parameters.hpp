// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "beamcast/autodiff.hpp"
#include "beamcast/tensor.hpp"

namespace beamcast {

/// 64-bit FNV-1a over a byte range; used for fingerprints and file checksums.
inline std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                           std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  return fnv1a(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(s.data()),
                                              s.size()),
               seed);
}

/// Ordered set of named learnable tensors.
template <typename T>
class ParameterSet {
 public:
  ad::Var<T>& add(const std::string& name, Tensor<T> init) {
    if (index_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, ad::Var<T>::leaf(std::move(init)));
    return entries_.back().second;
  }

  const ad::Var<T>& operator[](const std::string& name) const { return entries_.at(index_.at(name)).second; }
  ad::Var<T>& operator[](const std::string& name) { return entries_.at(index_.at(name)).second; }
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  ad::Var<T>& var(std::size_t i) { return entries_[i].second; }
  const ad::Var<T>& var(std::size_t i) const { return entries_[i].second; }

  std::vector<ad::Var<T>> vars() const {
    std::vector<ad::Var<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.second);
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
  }

  /// Hash of names and shapes; identifies a compatible architecture.
  std::uint64_t layout_fingerprint() const {
    std::string desc;
    for (const auto& e : entries_) desc += e.first + to_string(e.second.shape()) + ";";
    return fnv1a(desc);
  }

  /// Hash of the raw parameter bytes; changes whenever any value changes.
  std::uint64_t value_fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : entries_) {
      const auto data = e.second.value().data();
      h = fnv1a(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(data.data()),
                                               data.size_bytes()),
                h);
    }
    return h;
  }

  /// Deep copy; the copy's leaves are independent of this set's.
  ParameterSet clone() const {
    ParameterSet out;
    for (const auto& e : entries_) out.add(e.first, e.second.value());
    return out;
  }

 private:
  std::vector<std::pair<std::string, ad::Var<T>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace beamcast
