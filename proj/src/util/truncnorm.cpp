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

#include "trajsim/util/truncnorm.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace trajsim {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Mills ratio R(a) = (1 - Phi(a)) / phi(a) for a >= 0 via the Laplace
// continued fraction R(a) = 1/(a + 1/(a + 2/(a + 3/(...)))).
double mills_ratio_cf(double a) {
  double cf = 0.0;
  for (int k = 64; k >= 1; --k) cf = static_cast<double>(k) / (a + cf);
  return 1.0 / (a + cf);
}
}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double log_ndtr(double x) {
  if (x >= -6.0) {
    double c = norm_cdf(x);
    if (c >= 1.0) return 0.0;
    return std::log(c);
  }
  // Phi(x) = phi(x) * R(-x) for x << 0.
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio_cf(-x));
}

double mills_lambda(double a) {
  if (a < 6.0) {
    double tail = 0.5 * std::erfc(a / kSqrt2);
    return norm_pdf(a) / tail;
  }
  return 1.0 / mills_ratio_cf(a);
}

double probit(double p) {
  // Wichura's algorithm AS241 (PPND16).
  assert(p > 0.0 && p < 1.0);
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return (q < 0.0) ? -x : x;
}

double TruncatedNormal::mean() const {
  const double a = -loc / scale;  // standardized lower bound
  return loc + scale * mills_lambda(a);
}

double TruncatedNormal::variance() const {
  const double a = -loc / scale;
  const double lam = mills_lambda(a);
  return scale * scale * (1.0 + a * lam - lam * lam);
}

double TruncatedNormal::log_normalizer() const { return log_ndtr(loc / scale); }

double TruncatedNormal::sample(Rng& rng) const {
  const double a = -loc / scale;
  double z;
  if (a <= 0.0) {
    // Majority of the mass kept: invert on the lower-tail parameterization.
    const double cdf_a = norm_cdf(a);
    z = probit(cdf_a + rng.uniform() * (1.0 - cdf_a));
  } else if (a <= 8.0) {
    // Upper-tail parameterization avoids cancellation as Phi(a) -> 1.
    const double tail = 0.5 * std::erfc(a / kSqrt2);
    z = -probit(tail * (1.0 - rng.uniform()));
  } else {
    // Robert (1995) translated-exponential rejection for deep truncation.
    const double lam = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      const double x = a - std::log(rng.uniform()) / lam;
      const double d = x - lam;
      if (std::log(rng.uniform()) <= -0.5 * d * d) {
        z = x;
        break;
      }
    }
  }
  double value = loc + scale * z;
  return value > 0.0 ? value : 0.0;  // clip denormal-negative rounding
}

}  // namespace trajsim
