// Copyright 2026 The tsvf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsvf/common.hpp"

namespace tsvf {

/// One named tensor factor of a composite Hilbert space.
struct Subsystem {
  std::string label;
  std::size_t dim = 0;
};

/// Ordered list of labeled subsystems defining a composite Hilbert space.
///
/// Index convention: the first-listed subsystem varies slowest, i.e. a basis
/// vector's global index is built from per-subsystem digits read as a
/// mixed-radix number with the first subsystem as the most significant digit.
class SubsystemLayout {
 public:
  /// Largest composite dimension accepted for dense storage.
  static constexpr std::size_t dense_cap = std::size_t{1} << 20;

  SubsystemLayout() = default;

  explicit SubsystemLayout(std::vector<Subsystem> subsystems)
      : subs_(std::move(subsystems)) {
    dim_ = 1;
    for (const auto& s : subs_) {
      if (s.label.empty()) {
        throw std::invalid_argument("subsystem label must be non-empty");
      }
      if (s.dim < 1) {
        throw std::invalid_argument("subsystem '" + s.label +
                                    "' must have dimension >= 1");
      }
      if (dim_ > dense_cap / s.dim) {
        throw std::invalid_argument(
            "composite dimension exceeds dense cap 2^20 at subsystem '" +
            s.label + "'");
      }
      dim_ *= s.dim;
    }
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      for (std::size_t j = i + 1; j < subs_.size(); ++j) {
        if (subs_[i].label == subs_[j].label) {
          throw std::invalid_argument("duplicate subsystem label '" +
                                      subs_[i].label + "'");
        }
      }
    }
    strides_.assign(subs_.size(), 1);
    for (std::size_t i = subs_.size(); i-- > 1;) {
      strides_[i - 1] = strides_[i] * subs_[i].dim;
    }
  }

  std::size_t count() const { return subs_.size(); }
  std::size_t dimension() const { return dim_; }
  const Subsystem& at(std::size_t i) const { return subs_[i]; }
  const std::vector<Subsystem>& subsystems() const { return subs_; }

  /// Stride of subsystem i under the first-varies-slowest convention.
  std::size_t stride(std::size_t i) const { return strides_[i]; }

  bool has(const std::string& label) const {
    return find(label).has_value();
  }

  std::optional<std::size_t> find(const std::string& label) const {
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      if (subs_[i].label == label) return i;
    }
    return std::nullopt;
  }

  std::size_t position(const std::string& label) const {
    if (auto p = find(label)) return *p;
    throw std::invalid_argument("layout has no subsystem labeled '" + label + "'");
  }

  /// Per-subsystem digit of a global basis index.
  std::size_t digit(std::size_t global, std::size_t i) const {
    return (global / strides_[i]) % subs_[i].dim;
  }

  std::vector<std::size_t> digits(std::size_t global) const {
    std::vector<std::size_t> d(subs_.size());
    for (std::size_t i = 0; i < subs_.size(); ++i) d[i] = digit(global, i);
    return d;
  }

  std::size_t global_index(const std::vector<std::size_t>& digits) const {
    if (digits.size() != subs_.size()) {
      throw std::invalid_argument("digit count does not match subsystem count");
    }
    std::size_t g = 0;
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      if (digits[i] >= subs_[i].dim) {
        throw std::invalid_argument("digit out of range for subsystem '" +
                                    subs_[i].label + "'");
      }
      g += digits[i] * strides_[i];
    }
    return g;
  }

  /// Concatenation used by tensor products; rejects shared labels.
  SubsystemLayout concat(const SubsystemLayout& other) const {
    std::vector<Subsystem> all = subs_;
    for (const auto& s : other.subs_) {
      if (has(s.label)) {
        throw std::invalid_argument("duplicate subsystem label '" + s.label +
                                    "' in tensor product");
      }
      all.push_back(s);
    }
    return SubsystemLayout(std::move(all));
  }

  /// Sub-layout of the given labels, kept in this layout's order.
  SubsystemLayout restricted(const std::vector<std::string>& labels) const {
    for (const auto& l : labels) position(l);  // existence check, names the label
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        if (labels[i] == labels[j]) {
          throw std::invalid_argument("label '" + labels[i] +
                                      "' listed more than once");
        }
      }
    }
    std::vector<Subsystem> kept;
    for (const auto& s : subs_) {
      if (std::find(labels.begin(), labels.end(), s.label) != labels.end()) {
        kept.push_back(s);
      }
    }
    return SubsystemLayout(std::move(kept));
  }

  friend bool operator==(const SubsystemLayout& a, const SubsystemLayout& b) {
    if (a.subs_.size() != b.subs_.size()) return false;
    for (std::size_t i = 0; i < a.subs_.size(); ++i) {
      if (a.subs_[i].label != b.subs_[i].label || a.subs_[i].dim != b.subs_[i].dim)
        return false;
    }
    return true;
  }
  friend bool operator!=(const SubsystemLayout& a, const SubsystemLayout& b) {
    return !(a == b);
  }

 private:
  std::vector<Subsystem> subs_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 1;
};

}  // namespace tsvf
