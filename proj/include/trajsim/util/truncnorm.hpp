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

#ifndef TRAJSIM_UTIL_TRUNCNORM_HPP
#define TRAJSIM_UTIL_TRUNCNORM_HPP

#include "trajsim/util/rng.hpp"

namespace trajsim {

// Scalar normal special functions, accurate over the full double range.
double norm_pdf(double x);
double norm_cdf(double x);
/// log Phi(x), stable for very negative x (Mills-ratio continued fraction).
double log_ndtr(double x);
/// Inverse standard normal CDF (Wichura AS241, ~1e-15 relative accuracy).
double probit(double p);
/// Hazard (inverse Mills) ratio lambda(a) = pdf(a) / (1 - cdf(a)), stable for large a.
double mills_lambda(double a);

/// Normal(loc, scale^2) truncated to [0, inf).
struct TruncatedNormal {
  double loc;
  double scale;

  /// E[X]; equals loc + scale * pdf(loc/scale) / cdf(loc/scale).
  double mean() const;
  double variance() const;
  /// log integral_0^inf N(x; loc, scale^2) dx = log Phi(loc/scale).
  double log_normalizer() const;
  /// Inverse-CDF draw for moderate truncation, exponential rejection
  /// (Robert 1995) when the location is far below zero.
  double sample(Rng& rng) const;
};

}  // namespace trajsim

#endif  // TRAJSIM_UTIL_TRUNCNORM_HPP
