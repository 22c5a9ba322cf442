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

#ifndef TRAJSIM_UTIL_PARALLEL_HPP
#define TRAJSIM_UTIL_PARALLEL_HPP

#include <functional>

namespace trajsim {

/// Global worker cap (the CLI `--threads` flag). 0 = hardware concurrency.
void set_threads(int n);
int thread_count();

/// Runs fn(begin, end) over a static partition of [0, n) across workers and
/// waits. Work must be index-deterministic: results may only depend on the
/// index range, never on scheduling, so output is identical for any thread
/// count. Reductions happen after the join, in index order.
void parallel_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace trajsim

#endif  // TRAJSIM_UTIL_PARALLEL_HPP
