// Copyright 2026 the trajsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRAJSIM_UTIL_RNG_HPP
#define TRAJSIM_UTIL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace trajsim {

// Seed derivation: a global seed is split into independent module/stream
// seeds by hashing a textual tag (and optional integer ids) into the base
// with FNV-1a and finishing with one splitmix64 round. Adding new tags
// never perturbs existing streams.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t id);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t id_a,
                          std::uint64_t id_b);

/// Deterministic random stream. All distribution draws are implemented on
/// top of raw 64-bit output (no std::*_distribution), so sequences are
/// bit-identical across platforms and compilers.
class Rng {
 public:
  Rng() : engine_(0x9e3779b97f4a7c15ull) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t u64() { return engine_(); }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform() { return (static_cast<double>(u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via the inverse CDF (one uniform per draw).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace trajsim

#endif  // TRAJSIM_UTIL_RNG_HPP
