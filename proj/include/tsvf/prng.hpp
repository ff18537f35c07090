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

#include <cstdint>

namespace tsvf {

/// Deterministic counter-indexed generator used for all stochastic sampling.
///
/// Draw i for seed s is splitmix64 evaluated at internal state
/// s + (i+1)*GAMMA, which makes any sub-range of draws computable
/// independently: a worker handling draws [lo, hi) needs only (seed, lo).
/// IEEE-754 and uint64 arithmetic only, so results are identical across
/// platforms.
namespace prng {

inline constexpr const char* name = "splitmix64";
inline constexpr const char* version = "1";
inline constexpr std::uint64_t gamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// The i-th draw of the stream identified by `seed`.
inline std::uint64_t draw(std::uint64_t seed, std::uint64_t index) {
  return mix(seed + (index + 1) * gamma);
}

/// The i-th draw mapped to [0, 1) with 53 bits of precision.
inline double uniform(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(draw(seed, index) >> 11) * 0x1.0p-53;
}

}  // namespace prng
}  // namespace tsvf
