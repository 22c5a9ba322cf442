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

#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "trajsim/util/config.hpp"
#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/parallel.hpp"
#include "trajsim/util/rng.hpp"
#include "trajsim/util/truncnorm.hpp"

using namespace trajsim;

TEST_CASE("probit inverts the normal cdf") {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9}) {
    CHECK(norm_cdf(probit(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK(probit(0.5) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("log_ndtr agrees with the direct form and stays finite in the tail") {
  for (double x : {-5.0, -2.0, 0.0, 1.5, 4.0}) {
    CHECK(log_ndtr(x) == doctest::Approx(std::log(norm_cdf(x))).epsilon(1e-12));
  }
  // Deep tail: compare against the Mills asymptotic by consistency of the
  // derivative relation d/dx log Phi(x) = pdf/Phi = lambda(-x).
  for (double x : {-8.0, -15.0, -30.0, -100.0}) {
    const double h = 1e-3;
    const double numeric = (log_ndtr(x + h) - log_ndtr(x - h)) / (2 * h);
    CHECK(numeric == doctest::Approx(mills_lambda(-x)).epsilon(1e-4));
    CHECK(std::isfinite(log_ndtr(x)));
  }
}

TEST_CASE("truncated normal closed-form moments") {
  // At loc 0, scale 1 the mean is sqrt(2/pi) (half normal).
  TruncatedNormal tn{0.0, 1.0};
  CHECK(tn.mean() == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
  CHECK(tn.variance() == doctest::Approx(1.0 - 2.0 / M_PI).epsilon(1e-12));
  // Far positive location: essentially untruncated.
  TruncatedNormal far{8.0, 0.5};
  CHECK(far.mean() == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(far.variance() == doctest::Approx(0.25).epsilon(1e-6));
  // Deep truncation: mean approaches scale^2 / |loc|.
  TruncatedNormal deep{-50.0, 1.0};
  CHECK(deep.mean() == doctest::Approx(1.0 / 50.0).epsilon(1e-2));
  CHECK(deep.mean() > 0.0);
}

TEST_CASE("truncated normal sampler matches analytic moments within 3 SE") {
  Rng rng(1234);
  for (const auto& tn : {TruncatedNormal{0.7, 1.3}, TruncatedNormal{-2.0, 0.8},
                         TruncatedNormal{-12.0, 1.0}, TruncatedNormal{3.0, 2.0}}) {
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    double min_seen = 1e300;
    for (int i = 0; i < n; ++i) {
      const double x = tn.sample(rng);
      min_seen = std::min(min_seen, x);
      sum += x;
      sumsq += x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt(tn.variance() / n);
    CHECK(min_seen >= 0.0);
    CHECK(std::fabs(mean - tn.mean()) < 3.0 * se);
    const double var = sumsq / n - mean * mean;
    CHECK(var == doctest::Approx(tn.variance()).epsilon(0.02));
  }
}

TEST_CASE("rng streams are deterministic and seed-separated") {
  Rng a(derive_seed(7, "stream", 0));
  Rng b(derive_seed(7, "stream", 0));
  Rng c(derive_seed(7, "stream", 1));
  bool all_equal = true, any_equal_c = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.u64();
    all_equal = all_equal && (va == b.u64());
    any_equal_c = any_equal_c || (va == c.u64());
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_c);
  CHECK(derive_seed(7, "x") != derive_seed(8, "x"));
  CHECK(derive_seed(7, "x") != derive_seed(7, "y"));
}

TEST_CASE("rng below is in range") {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

TEST_CASE("config parsing and validation") {
  const auto cfg = Config::from_string("a.b = 3\n# comment\nlist = x, y,z \nflag = true\n");
  CHECK(cfg.get_int("a.b", 0) == 3);
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_list("list") == std::vector<std::string>{"x", "y", "z"});
  CHECK(cfg.get_string("missing", "d") == "d");
  CHECK_NOTHROW(cfg.validate({"a.b", "list", "flag"}));
  CHECK_THROWS_AS(cfg.validate({"a.b"}), Error);
  CHECK_THROWS_AS(Config::from_string("novalue\n"), Error);
}

TEST_CASE("csv round trip and deterministic float format") {
  const std::string path = "/tmp/trajsim_test_util.csv";
  {
    CsvWriter out(path, {"a", "b"});
    out.row({"x", fmt_double(1.0 / 3.0)});
    out.row({"y", fmt_double(2.5e-17)});
  }
  const auto table = read_csv(path);
  REQUIRE(table.rows.size() == 2);
  CHECK(std::strtod(table.rows[0][1].c_str(), nullptr) == 1.0 / 3.0);
  CHECK(std::strtod(table.rows[1][1].c_str(), nullptr) == 2.5e-17);
  CHECK(table.column("b") == 1);
  CHECK(table.column("zz") == -1);
}

TEST_CASE("parallel blocks cover the range once for any thread count") {
  for (int threads : {1, 2, 4}) {
    set_threads(threads);
    std::vector<int> hits(1000, 0);
    parallel_blocks(hits.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
    // Nested use degrades to serial instead of deadlocking.
    std::vector<int> nested(64, 0);
    parallel_blocks(8, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        parallel_blocks(8, [&](std::size_t bb, std::size_t ee) {
          for (std::size_t j = bb; j < ee; ++j) ++nested[i * 8 + j];
        });
    });
    CHECK(std::accumulate(nested.begin(), nested.end(), 0) == 64);
  }
  set_threads(0);
}
