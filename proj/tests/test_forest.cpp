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

#include <doctest.h>

#include "trajsim/forest.hpp"
#include "trajsim/util/rng.hpp"

using namespace trajsim;
using forest::Forest;
using forest::ForestConfig;

namespace {
MatRX column(const VectorXd& y) {
  MatRX m(y.size(), 1);
  m.col(0) = y;
  return m;
}
}  // namespace

TEST_CASE("constant labels give constant predictions") {
  Rng rng(1);
  MatRX x(40, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const VectorXd y = VectorXd::Constant(40, 3.25);
  Forest rf;
  ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.max_depth = 8;
  cfg.seed = 5;
  rf.fit(x, column(y), cfg);
  for (int i = 0; i < 10; ++i) {
    VectorXd probe(3);
    probe << rng.normal(), rng.normal(), rng.normal();
    CHECK(rf.predict_scalar(probe.data()) == doctest::Approx(3.25).epsilon(1e-12));
  }
}

TEST_CASE("a single unbagged deep tree memorizes its training set") {
  Rng rng(2);
  MatRX x(60, 2);
  VectorXd y(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y(i) = rng.normal();
  }
  Forest rf;
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.max_depth = 30;
  cfg.min_leaf = 1;
  cfg.bootstrap = false;
  cfg.seed = 7;
  rf.fit(x, column(y), cfg);
  double rms = 0.0;
  for (Eigen::Index i = 0; i < 60; ++i) {
    const double d = rf.predict_scalar(x.row(i).data()) - y(i);
    rms += d * d;
  }
  CHECK(std::sqrt(rms / 60) < 1e-9);
}

TEST_CASE("step function target is learned to rms < 0.1") {
  Rng rng(3);
  MatRX x(400, 1);
  VectorXd y(400);
  for (Eigen::Index i = 0; i < 400; ++i) {
    x(i, 0) = 2.0 * rng.uniform() - 1.0;
    y(i) = x(i, 0) > 0.0 ? 1.0 : 0.0;
  }
  Forest rf;
  ForestConfig cfg;
  cfg.n_trees = 100;
  cfg.max_depth = 8;
  cfg.min_leaf = 5;
  cfg.seed = 11;
  rf.fit(x, column(y), cfg);
  double rms = 0.0;
  int n = 0;
  for (double probe = -0.95; probe <= 0.95; probe += 0.01, ++n) {
    const double pred = rf.predict_scalar(&probe);
    const double truth = probe > 0.0 ? 1.0 : 0.0;
    rms += (pred - truth) * (pred - truth);
  }
  CHECK(std::sqrt(rms / n) < 0.1);
}

TEST_CASE("depth bound and label-range bound hold") {
  Rng rng(4);
  MatRX x(300, 4);
  VectorXd y(300);
  for (Eigen::Index i = 0; i < 300; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y(i) = x(i, 0) * 3.0 + rng.normal();
  }
  Forest rf;
  ForestConfig cfg;
  cfg.n_trees = 25;
  cfg.max_depth = 5;
  cfg.min_leaf = 2;
  cfg.seed = 13;
  rf.fit(x, column(y), cfg);
  CHECK(rf.max_tree_depth() <= 5);
  const double lo = y.minCoeff(), hi = y.maxCoeff();
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd probe(4);
    for (int j = 0; j < 4; ++j) probe(j) = 3.0 * rng.normal();
    const double pred = rf.predict_scalar(probe.data());
    CHECK(pred >= lo);
    CHECK(pred <= hi);
  }
}

TEST_CASE("classification: separable features classify, identical ones do not") {
  Rng rng(5);
  ForestConfig cfg;
  cfg.n_trees = 5;
  cfg.max_depth = 5;
  cfg.min_leaf = 1;
  cfg.classification = true;
  cfg.seed = 17;

  SUBCASE("linearly separable") {
    MatRX x(200, 2);
    VectorXd y(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      const bool one = i % 2 == 0;
      x(i, 0) = rng.normal() + (one ? 3.0 : -3.0);
      x(i, 1) = rng.normal();
      y(i) = one ? 1.0 : 0.0;
    }
    Forest rf;
    rf.fit(x, column(y), cfg);
    int correct = 0;
    for (Eigen::Index i = 0; i < 200; ++i)
      correct += (rf.predict_scalar(x.row(i).data()) > 0.5) == (y(i) == 1.0);
    CHECK(correct > 190);
    CHECK(rf.max_tree_depth() <= 5);
  }

  SUBCASE("indistinguishable classes stay near chance on held-out data") {
    const int n = 2000;
    MatRX x(n, 3), x_fresh(n, 3);
    VectorXd y(n), y_fresh(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) {
        x(i, j) = rng.normal();
        x_fresh(i, j) = rng.normal();
      }
      y(i) = i % 2 ? 1.0 : 0.0;
      y_fresh(i) = i % 2 ? 1.0 : 0.0;
    }
    Forest rf;
    rf.fit(x, column(y), cfg);
    double correct = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      correct += (rf.predict_scalar(x_fresh.row(i).data()) > 0.5) == (y_fresh(i) == 1.0);
    CHECK(correct / n == doctest::Approx(0.5).epsilon(0.1));
  }
}

TEST_CASE("fits are deterministic under the seed") {
  Rng rng(6);
  MatRX x(100, 3);
  VectorXd y(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
    y(i) = rng.normal();
  }
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 23;
  Forest a, b;
  a.fit(x, column(y), cfg);
  b.fit(x, column(y), cfg);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd probe(3);
    for (int j = 0; j < 3; ++j) probe(j) = rng.normal();
    CHECK(a.predict_scalar(probe.data()) == b.predict_scalar(probe.data()));
  }
}
