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
#include <filesystem>
#include <vector>

#include <doctest.h>

#include "trajsim/crbm.hpp"
#include "trajsim/util/errors.hpp"

using namespace trajsim;
using crbm::CrbmParams;
using model::Block;
using model::BlockGroup;
using model::UnitType;

namespace {

Block block(UnitType type, int width, BlockGroup group = BlockGroup::statics) {
  Block b;
  b.type = type;
  b.width = width;
  b.group = group;
  b.variable = "u";
  return b;
}

CrbmParams random_params(const model::VisibleLayout& layout, int n_hidden, std::uint64_t seed,
                         double w_scale = 0.4) {
  auto p = CrbmParams::zeros(layout, n_hidden);
  Rng rng(seed);
  for (Eigen::Index j = 0; j < p.weights.rows(); ++j)
    for (int mu = 0; mu < n_hidden; ++mu) p.weights(j, mu) = w_scale * rng.normal();
  for (Eigen::Index j = 0; j < p.vis_loc.size(); ++j) p.vis_loc(j) = 0.5 * rng.normal();
  for (int mu = 0; mu < n_hidden; ++mu) p.hid_loc(mu) = 0.5 * rng.normal();
  for (int j : p.continuous_units()) p.vis_log_sigma(j) = 0.3 * rng.normal();
  return p;
}

// 2 binary + one-hot(2) + 2 continuous = 6 coordinates, 3 hidden.
CrbmParams mixed_toy(std::uint64_t seed) {
  const auto layout = crbm::make_layout({block(UnitType::binary, 1), block(UnitType::binary, 1),
                                         block(UnitType::onehot, 2),
                                         block(UnitType::continuous, 1),
                                         block(UnitType::continuous, 1)});
  return random_params(layout, 3, seed);
}

// All-binary toy: 3 visibles (8 states), 2 hidden.
CrbmParams binary_toy(std::uint64_t seed, double w_scale = 0.5) {
  const auto layout = crbm::make_layout(
      {block(UnitType::binary, 1), block(UnitType::binary, 1), block(UnitType::binary, 1)});
  return random_params(layout, 2, seed, w_scale);
}

VectorXd random_state(const CrbmParams& p, Rng& rng) {
  VectorXd v = VectorXd::Zero(p.n_visible());
  for (const auto& b : p.layout.blocks) {
    switch (b.type) {
      case UnitType::binary:
        v(b.offset) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        break;
      case UnitType::onehot:
        v(b.offset + static_cast<int>(rng.below(static_cast<std::uint64_t>(b.width)))) = 1.0;
        break;
      case UnitType::continuous:
        v(b.offset) = rng.normal();
        break;
    }
  }
  return v;
}

VectorXd random_hidden(const CrbmParams& p, Rng& rng) {
  VectorXd h(p.n_hidden);
  for (int mu = 0; mu < p.n_hidden; ++mu) h(mu) = std::fabs(rng.normal());
  return h;
}

MatRX one_row(const VectorXd& v) {
  MatRX m(1, v.size());
  m.row(0) = v.transpose();
  return m;
}

// All discrete visible states of an all-discrete layout.
std::vector<VectorXd> enumerate_states(const CrbmParams& p) {
  std::vector<VectorXd> states;
  std::vector<int> digits(p.layout.blocks.size(), 0);
  for (;;) {
    VectorXd v = VectorXd::Zero(p.n_visible());
    for (std::size_t k = 0; k < p.layout.blocks.size(); ++k) {
      const auto& b = p.layout.blocks[k];
      if (b.type == UnitType::binary)
        v(b.offset) = digits[k];
      else
        v(b.offset + digits[k]) = 1.0;
    }
    states.push_back(std::move(v));
    std::size_t k = 0;
    for (;; ++k) {
      if (k == digits.size()) return states;
      const auto& b = p.layout.blocks[k];
      const int arity = b.type == UnitType::binary ? 2 : b.width;
      if (++digits[k] < arity) break;
      digits[k] = 0;
    }
  }
}

// Simpson quadrature of the per-hidden-unit integral
// int_0^inf exp(-(h-b)^2/(2 eps^2) + h*phi/eps^2) dh.
double hidden_integral_quadrature(double b, double eps, double phi) {
  const double m = b + phi;
  const double hi = std::max(0.0, m) + 14.0 * eps;
  const int n = 40000;  // even
  const double dh = hi / n;
  auto f = [&](double h) {
    return std::exp(-(h - b) * (h - b) / (2 * eps * eps) + h * phi / (eps * eps));
  };
  double sum = f(0.0) + f(hi);
  for (int i = 1; i < n; ++i) sum += f(i * dh) * (i % 2 ? 4.0 : 2.0);
  return sum * dh / 3.0;
}

double free_energy_quadrature(const CrbmParams& p, const VectorXd& v) {
  const crbm::Precomp pre = crbm::precompute(p);
  double vis = 0.0;
  for (const auto& b : p.layout.blocks) {
    for (int j = 0; j < b.width; ++j) {
      const int idx = b.offset + j;
      if (b.type == UnitType::continuous) {
        const double d = v(idx) - p.vis_loc(idx);
        vis += -d * d * 0.5 * pre.inv_sigma2(idx);
      } else {
        vis += p.vis_loc(idx) * v(idx);
      }
    }
  }
  double logint = 0.0;
  for (int mu = 0; mu < p.n_hidden; ++mu) {
    const double phi =
        (p.weights.col(mu).array() * v.array() * pre.inv_sigma2).sum();
    logint += std::log(hidden_integral_quadrature(p.hid_loc(mu), pre.eps(mu), phi));
  }
  return -(vis + logint);
}

}  // namespace

TEST_CASE("energy: zero parameters and zero state give zero") {
  auto p = CrbmParams::zeros(
      crbm::make_layout({block(UnitType::binary, 1), block(UnitType::continuous, 1)}), 2);
  CHECK(crbm::energy(p, VectorXd::Zero(2), VectorXd::Zero(2)) == 0.0);
}

TEST_CASE("energy is linear in a single weight") {
  auto p = binary_toy(3);
  Rng rng(4);
  VectorXd v = random_state(p, rng);
  VectorXd h = random_hidden(p, rng);
  v(0) = 1.0;
  h(0) = 1.0;
  const double w0 = p.weights(0, 0);
  const double e0 = crbm::energy(p, v, h);
  p.weights(0, 0) = w0 + 1.0;  // sigma = eps = 1
  const double e1 = crbm::energy(p, v, h);
  CHECK(e1 - e0 == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("free energy matches hidden-space quadrature") {
  Rng rng(5);
  for (auto seed : {11u, 12u}) {
    const auto p = mixed_toy(seed);
    for (int rep = 0; rep < 4; ++rep) {
      const VectorXd v = random_state(p, rng);
      const double f = crbm::free_energy_one(p, v);
      const double fq = free_energy_quadrature(p, v);
      CHECK(f == doctest::Approx(fq).epsilon(1e-6));
    }
  }
}

TEST_CASE("free energy with zero weights separates from the hidden constant") {
  auto p = mixed_toy(21);
  p.weights.setZero();
  Rng rng(6);
  const VectorXd v1 = random_state(p, rng);
  const VectorXd v2 = random_state(p, rng);
  const crbm::Precomp pre = crbm::precompute(p);
  auto vis_term = [&](const VectorXd& v) {
    double vis = 0.0;
    for (const auto& b : p.layout.blocks)
      for (int j = 0; j < b.width; ++j) {
        const int idx = b.offset + j;
        if (b.type == UnitType::continuous) {
          const double d = v(idx) - p.vis_loc(idx);
          vis += -d * d * 0.5 * pre.inv_sigma2(idx);
        } else {
          vis += p.vis_loc(idx) * v(idx);
        }
      }
    return vis;
  };
  // F(v) + sum_j a_j(v_j) is a constant independent of v.
  const double c1 = crbm::free_energy_one(p, v1) + vis_term(v1);
  const double c2 = crbm::free_energy_one(p, v2) + vis_term(v2);
  CHECK(c1 == doctest::Approx(c2).epsilon(1e-12));
}

TEST_CASE("analytic free-energy gradient matches central finite differences") {
  const auto p0 = mixed_toy(31);
  Rng rng(7);
  const VectorXd v = random_state(p0, rng);
  const crbm::Moments analytic = crbm::neg_free_energy_grad(p0, one_row(v));
  const VectorXd a = analytic.flatten(p0);

  CrbmParams p = p0;
  VectorXd theta = p.flatten();
  const double step = 1e-4;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + step;
    p.unflatten(theta);
    const double fp = crbm::free_energy_one(p, v);
    theta(i) = saved - step;
    p.unflatten(theta);
    const double fm = crbm::free_energy_one(p, v);
    theta(i) = saved;
    const double fd = -(fp - fm) / (2 * step);  // -dF/dtheta
    const double rel = std::fabs(a(i) - fd) / std::max({1e-6, std::fabs(a(i)), std::fabs(fd)});
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("hidden conditional: zero weights recover the prior; samples stay nonnegative") {
  auto p = mixed_toy(41);
  p.weights.setZero();
  Rng rng(8);
  const VectorXd v = random_state(p, rng);
  const auto cond = crbm::hidden_conditional(p, v);
  for (int mu = 0; mu < p.n_hidden; ++mu) {
    CHECK(cond.loc(mu) == doctest::Approx(p.hid_loc(mu)).epsilon(1e-12));
    CHECK(cond.scale(mu) == doctest::Approx(std::exp(p.hid_log_eps(mu))).epsilon(1e-12));
  }
  // Empirical mean of one unit across 10^6 draws within 3 standard errors.
  const TruncatedNormal tn{cond.loc(0), cond.scale(0)};
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = tn.sample(rng);
    CHECK(x >= 0.0);
    sum += x;
  }
  const double se = std::sqrt(tn.variance() / n);
  CHECK(std::fabs(sum / n - cond.mean(0)) < 3 * se);
}

TEST_CASE("visible conditional blocks normalize and match enumeration") {
  const auto p = mixed_toy(51);
  Rng rng(9);
  const VectorXd h = random_hidden(p, rng);
  const MatRX means = crbm::visible_conditional_means(p, one_row(h));
  // One-hot block probabilities sum to one.
  for (const auto& b : p.layout.blocks) {
    if (b.type != UnitType::onehot) continue;
    double sum = 0.0;
    for (int j = 0; j < b.width; ++j) sum += means(0, b.offset + j);
    CHECK(std::fabs(sum - 1.0) < 1e-12);
  }

  // With zero weights a binary unit is Bernoulli(sigmoid(bias)).
  auto p0 = binary_toy(52);
  p0.weights.setZero();
  const VectorXd h0 = random_hidden(p0, rng);
  const MatRX m0 = crbm::visible_conditional_means(p0, one_row(h0));
  for (int j = 0; j < 3; ++j)
    CHECK(m0(0, j) == doctest::Approx(1.0 / (1.0 + std::exp(-p0.vis_loc(j)))).epsilon(1e-12));

  // Tiny binary model: conditional p(v_j | h) from enumerating exp(-E).
  const auto pb = binary_toy(53);
  const VectorXd hb = random_hidden(pb, rng);
  const MatRX mb = crbm::visible_conditional_means(pb, one_row(hb));
  const auto states = enumerate_states(pb);
  VectorXd marg = VectorXd::Zero(3);
  double z = 0.0;
  for (const auto& v : states) {
    const double w = std::exp(-crbm::energy(pb, v, hb));
    z += w;
    marg += w * v;
  }
  marg /= z;
  for (int j = 0; j < 3; ++j) CHECK(mb(0, j) == doctest::Approx(marg(j)).epsilon(1e-10));
}

TEST_CASE("gibbs: fully clamped state is bit-identical") {
  const auto p = mixed_toy(61);
  Rng rng(10);
  MatRX v(2, p.n_visible());
  v.row(0) = random_state(p, rng).transpose();
  v.row(1) = random_state(p, rng).transpose();
  const MatRX before = v;
  MatRXu8 clamp = MatRXu8::Ones(2, p.n_visible());
  std::vector<Rng> rngs{Rng(1), Rng(2)};
  crbm::GibbsWorkspace ws;
  const crbm::Precomp pre = crbm::precompute(p);
  crbm::gibbs(p, pre, v, &clamp, 25, rngs, ws);
  CHECK((v - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gibbs stationary distribution matches enumeration within TV 0.02") {
  const auto p = binary_toy(71, 0.6);
  // Exact p(v) over the 8 states.
  const auto states = enumerate_states(p);
  const double logz = crbm::brute_force_logZ(p);
  std::vector<double> exact;
  for (const auto& v : states) exact.push_back(std::exp(-crbm::free_energy_one(p, v) - logz));

  MatRX v = MatRX::Zero(1, 3);
  std::vector<Rng> rngs{Rng(202)};
  crbm::GibbsWorkspace ws;
  const crbm::Precomp pre = crbm::precompute(p);
  crbm::gibbs(p, pre, v, nullptr, 100, rngs, ws);  // burn-in
  std::vector<double> counts(8, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    crbm::gibbs(p, pre, v, nullptr, 1, rngs, ws);
    const int idx = static_cast<int>(v(0, 0)) + 2 * static_cast<int>(v(0, 1)) +
                    4 * static_cast<int>(v(0, 2));
    counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  double tv = 0.0;
  for (int k = 0; k < 8; ++k) tv += std::fabs(counts[static_cast<std::size_t>(k)] / n -
                                              exact[static_cast<std::size_t>(k)]);
  CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("gibbs streams are bit-identical under the same seed") {
  const auto p = mixed_toy(81);
  MatRX v1 = MatRX::Zero(3, p.n_visible());
  MatRX v2 = MatRX::Zero(3, p.n_visible());
  std::vector<Rng> r1, r2;
  for (int i = 0; i < 3; ++i) {
    r1.emplace_back(derive_seed(5, "t", static_cast<std::uint64_t>(i)));
    r2.emplace_back(derive_seed(5, "t", static_cast<std::uint64_t>(i)));
  }
  crbm::GibbsWorkspace w1, w2;
  const crbm::Precomp pre = crbm::precompute(p);
  crbm::gibbs(p, pre, v1, nullptr, 37, r1, w1);
  crbm::gibbs(p, pre, v2, nullptr, 37, r2, w2);
  CHECK((v1 - v2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("impute keeps observed coordinates and fills valid blocks") {
  const auto p = mixed_toy(91);
  Rng rng(11);
  const VectorXd full = random_state(p, rng);
  MatRX v = one_row(full);
  MatRXu8 observed = MatRXu8::Ones(1, p.n_visible());

  SUBCASE("nothing missing: identity") {
    std::vector<Rng> rngs{Rng(3)};
    const MatRX out = crbm::impute(p, v, observed, 2, rngs);
    CHECK((out - v).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("missing one-hot block is a valid one-hot after imputation") {
    for (const auto& b : p.layout.blocks)
      if (b.type == UnitType::onehot)
        for (int j = 0; j < b.width; ++j) {
          v(0, b.offset + j) = 0.0;
          observed(0, b.offset + j) = 0;
        }
    std::vector<Rng> rngs{Rng(4)};
    const MatRX out = crbm::impute(p, v, observed, 2, rngs);
    for (const auto& b : p.layout.blocks) {
      if (b.type != UnitType::onehot) continue;
      double sum = 0.0;
      for (int j = 0; j < b.width; ++j) {
        sum += out(0, b.offset + j);
        CHECK((out(0, b.offset + j) == 0.0 || out(0, b.offset + j) == 1.0));
      }
      CHECK(sum == 1.0);
    }
    // Observed coordinates are untouched bit-exactly.
    for (const auto& b : p.layout.blocks)
      if (b.type != UnitType::onehot)
        for (int j = 0; j < b.width; ++j) CHECK(out(0, b.offset + j) == v(0, b.offset + j));
  }
}

TEST_CASE("all-missing imputation approaches the model marginal with more steps") {
  const auto p = binary_toy(101, 0.6);
  const auto states = enumerate_states(p);
  const double logz = crbm::brute_force_logZ(p);
  std::vector<double> exact;
  for (const auto& v : states) exact.push_back(std::exp(-crbm::free_energy_one(p, v) - logz));

  auto tv_at_steps = [&](int steps) {
    const int n = 20000;
    MatRX v = MatRX::Zero(n, 3);
    MatRXu8 observed = MatRXu8::Zero(n, 3);
    std::vector<Rng> rngs;
    for (int i = 0; i < n; ++i)
      rngs.emplace_back(derive_seed(777, "imp", static_cast<std::uint64_t>(steps),
                                    static_cast<std::uint64_t>(i)));
    const MatRX out = crbm::impute(p, v, observed, steps, rngs);
    std::vector<double> counts(8, 0.0);
    for (int i = 0; i < n; ++i) {
      const int idx = static_cast<int>(out(i, 0)) + 2 * static_cast<int>(out(i, 1)) +
                      4 * static_cast<int>(out(i, 2));
      counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    double tv = 0.0;
    for (int k = 0; k < 8; ++k)
      tv += std::fabs(counts[static_cast<std::size_t>(k)] / n - exact[static_cast<std::size_t>(k)]);
    return tv / 2.0;
  };
  const double tv2 = tv_at_steps(2);
  const double tv40 = tv_at_steps(40);
  CHECK(tv40 < tv2 + 0.02);  // no degradation
  CHECK(tv40 < 0.03);        // converged to the model marginal
}

TEST_CASE("brute force logZ") {
  SUBCASE("single binary visible with zero weights and biases") {
    auto p = CrbmParams::zeros(crbm::make_layout({block(UnitType::binary, 1)}), 2);
    // Z = 2 * prod_mu eps*sqrt(2pi)*Phi(b/eps) = 2 * (sqrt(2pi)/2)^2.
    const double c = std::pow(std::sqrt(2.0 * M_PI) * 0.5, 2.0);
    CHECK(crbm::brute_force_logZ(p) == doctest::Approx(std::log(2.0 * c)).epsilon(1e-12));
  }
  SUBCASE("decoupled models add") {
    const auto pa = binary_toy(111);
    // Same blocks duplicated; block-diagonal weights, duplicated biases.
    auto layout = crbm::make_layout(
        {block(UnitType::binary, 1), block(UnitType::binary, 1), block(UnitType::binary, 1),
         block(UnitType::binary, 1), block(UnitType::binary, 1), block(UnitType::binary, 1)});
    auto pc = CrbmParams::zeros(layout, 4);
    pc.weights.block(0, 0, 3, 2) = pa.weights;
    pc.weights.block(3, 2, 3, 2) = pa.weights;
    pc.vis_loc.segment(0, 3) = pa.vis_loc;
    pc.vis_loc.segment(3, 3) = pa.vis_loc;
    pc.hid_loc.segment(0, 2) = pa.hid_loc;
    pc.hid_loc.segment(2, 2) = pa.hid_loc;
    CHECK(crbm::brute_force_logZ(pc) ==
          doctest::Approx(2.0 * crbm::brute_force_logZ(pa)).epsilon(1e-10));
  }
  SUBCASE("cross-check against a full (v,h) grid on a 2x1 model") {
    const auto layout =
        crbm::make_layout({block(UnitType::binary, 1), block(UnitType::binary, 1)});
    const auto p = random_params(layout, 1, 121);
    double z = 0.0;
    for (int s = 0; s < 4; ++s) {
      VectorXd v(2);
      v << (s & 1), ((s >> 1) & 1);
      const double phi = (p.weights.col(0).array() * v.array()).sum();
      z += std::exp(p.vis_loc.dot(v)) * hidden_integral_quadrature(p.hid_loc(0), 1.0, phi);
    }
    CHECK(crbm::brute_force_logZ(p) == doctest::Approx(std::log(z)).epsilon(1e-4));
  }
  SUBCASE("continuous visible rejected") {
    const auto p = mixed_toy(131);
    CHECK_THROWS_AS(crbm::brute_force_logZ(p), Error);
  }
}

TEST_CASE("serialization round trip is bit exact") {
  auto p = mixed_toy(141);
  p.schema_hash = 0xdeadbeefcafef00dull;
  p.metadata["note"] = "toy";
  const std::string path = "/tmp/trajsim_test_model.crbm";
  crbm::save_params(p, path);
  const auto q = crbm::load_params(path);
  CHECK(q.schema_hash == p.schema_hash);
  CHECK(q.n_hidden == p.n_hidden);
  CHECK(q.metadata.at("note") == "toy");
  CHECK((q.weights - p.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.vis_loc - p.vis_loc).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.vis_log_sigma - p.vis_log_sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.hid_loc - p.hid_loc).cwiseAbs().maxCoeff() == 0.0);
  CHECK(q.layout.total_width == p.layout.total_width);
  CHECK(q.layout.blocks.size() == p.layout.blocks.size());
  // The text export parses as hexfloat and reproduces the same bytes on a
  // reload.
  const auto text = crbm::export_params_text(p);
  CHECK(text.find("0x") != std::string::npos);
  CHECK(crbm::export_params_text(q) == text);
  std::filesystem::remove(path);
}
