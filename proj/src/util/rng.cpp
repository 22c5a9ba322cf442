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

#include "trajsim/util/rng.hpp"

#include "trajsim/util/hash.hpp"
#include "trajsim/util/truncnorm.hpp"

namespace trajsim {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t s = fnv1a64(tag) ^ base;
  return splitmix64(s);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t id) {
  std::uint64_t s = derive_seed(base, tag) ^ (id * 0x9e3779b97f4a7c15ull);
  return splitmix64(s);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t id_a,
                          std::uint64_t id_b) {
  std::uint64_t s = derive_seed(base, tag, id_a) ^ (id_b * 0xbf58476d1ce4e5b9ull);
  return splitmix64(s);
}

double Rng::normal() { return probit(uniform()); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Unbiased rejection from the top of the 64-bit range.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t x;
  do {
    x = u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace trajsim
