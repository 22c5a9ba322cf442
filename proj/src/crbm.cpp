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

#include "trajsim/crbm.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "trajsim/util/errors.hpp"
#include "trajsim/util/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "container byte order is declared little-endian");

namespace trajsim::crbm {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}
}  // namespace

CrbmParams CrbmParams::zeros(model::VisibleLayout layout, int n_hidden) {
  CrbmParams p;
  p.layout = std::move(layout);
  p.n_hidden = n_hidden;
  const int nv = p.layout.total_width;
  p.weights = MatrixXd::Zero(nv, n_hidden);
  p.vis_loc = VectorXd::Zero(nv);
  p.vis_log_sigma = VectorXd::Zero(nv);
  p.hid_loc = VectorXd::Zero(n_hidden);
  p.hid_log_eps = VectorXd::Zero(n_hidden);
  return p;
}

std::vector<int> CrbmParams::continuous_units() const {
  std::vector<int> out;
  for (const auto& b : layout.blocks)
    if (b.type == model::UnitType::continuous)
      for (int j = 0; j < b.width; ++j) out.push_back(b.offset + j);
  return out;
}

Eigen::Index CrbmParams::flat_size() const {
  return weights.size() + vis_loc.size() +
         static_cast<Eigen::Index>(continuous_units().size()) + hid_loc.size();
}

VectorXd CrbmParams::flatten() const {
  VectorXd theta(flat_size());
  Eigen::Index at = 0;
  theta.segment(at, weights.size()) = Eigen::Map<const VectorXd>(weights.data(), weights.size());
  at += weights.size();
  theta.segment(at, vis_loc.size()) = vis_loc;
  at += vis_loc.size();
  for (int j : continuous_units()) theta(at++) = vis_log_sigma(j);
  theta.segment(at, hid_loc.size()) = hid_loc;
  return theta;
}

void CrbmParams::unflatten(const VectorXd& theta) {
  if (theta.size() != flat_size()) fail("DimensionMismatch", "unflatten size");
  Eigen::Index at = 0;
  Eigen::Map<VectorXd>(weights.data(), weights.size()) = theta.segment(at, weights.size());
  at += weights.size();
  vis_loc = theta.segment(at, vis_loc.size());
  at += vis_loc.size();
  for (int j : continuous_units()) vis_log_sigma(j) = theta(at++);
  hid_loc = theta.segment(at, hid_loc.size());
}

model::VisibleLayout make_layout(std::vector<model::Block> blocks) {
  model::VisibleLayout layout;
  int offset = 0;
  for (auto& b : blocks) {
    b.offset = offset;
    offset += b.width;
    switch (b.group) {
      case model::BlockGroup::statics: layout.width_static += b.width; break;
      case model::BlockGroup::time_t: layout.width_temporal += b.width; break;
      case model::BlockGroup::time_t1: break;
    }
    layout.blocks.push_back(b);
  }
  layout.total_width = offset;
  return layout;
}

Precomp precompute(const CrbmParams& p) {
  Precomp pre;
  pre.sigma = p.vis_log_sigma.array().exp();
  pre.inv_sigma2 = (-2.0 * p.vis_log_sigma.array()).exp();
  pre.eps = p.hid_log_eps.array().exp();
  pre.inv_eps2 = (-2.0 * p.hid_log_eps.array()).exp();
  pre.inv_sigma2_row = pre.inv_sigma2.transpose();
  pre.inv_eps2_row = pre.inv_eps2.transpose();
  return pre;
}

void GibbsWorkspace::resize(Eigen::Index rows, int n_visible, int n_hidden) {
  const int wide = std::max(n_visible, n_hidden);
  if (scaled.rows() < rows || scaled.cols() < wide) scaled.resize(rows, wide);
  if (hid_loc.rows() < rows || hid_loc.cols() < n_hidden) hid_loc.resize(rows, n_hidden);
  if (hidden.rows() < rows || hidden.cols() < n_hidden) hidden.resize(rows, n_hidden);
  if (psi.rows() < rows || psi.cols() < n_visible) psi.resize(rows, n_visible);
}

void hidden_locations(const CrbmParams& p, const Precomp& pre, const MatRX& v, MatRX& out,
                      MatRX& scaled_buf, std::size_t row_begin, std::size_t row_end) {
  const Eigen::Index b = static_cast<Eigen::Index>(row_begin);
  const Eigen::Index k = static_cast<Eigen::Index>(row_end - row_begin);
  const int nv = p.n_visible();
  scaled_buf.block(b, 0, k, nv) =
      (v.middleRows(b, k).array().rowwise() * pre.inv_sigma2_row).matrix();
  out.block(b, 0, k, p.n_hidden).noalias() = scaled_buf.block(b, 0, k, nv) * p.weights;
  out.block(b, 0, k, p.n_hidden).rowwise() += p.hid_loc.transpose();
}

void visible_inputs(const CrbmParams& p, const Precomp& pre, const MatRX& h, MatRX& out,
                    MatRX& scaled_buf, std::size_t row_begin, std::size_t row_end) {
  const Eigen::Index b = static_cast<Eigen::Index>(row_begin);
  const Eigen::Index k = static_cast<Eigen::Index>(row_end - row_begin);
  const int nh = p.n_hidden;
  scaled_buf.block(b, 0, k, nh) =
      (h.middleRows(b, k).array().rowwise() * pre.inv_eps2_row).matrix();
  out.block(b, 0, k, p.n_visible()).noalias() =
      scaled_buf.block(b, 0, k, nh) * p.weights.transpose();
  out.block(b, 0, k, p.n_visible()).rowwise() += p.vis_loc.transpose();
}

namespace {

void sample_hidden_rows(const CrbmParams& p, const Precomp& pre, const MatRX& hloc, MatRX& h,
                        std::vector<Rng>& rngs, std::size_t row_begin, std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    Rng& rng = rngs[i];
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    for (int mu = 0; mu < p.n_hidden; ++mu)
      h(row, mu) = TruncatedNormal{hloc(row, mu), pre.eps(mu)}.sample(rng);
  }
}

void sample_visible_rows(const CrbmParams& p, const Precomp& pre, const MatRX& input, MatRX& v,
                         const MatRXu8* clamp, std::vector<Rng>& rngs, std::size_t row_begin,
                         std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    Rng& rng = rngs[i];
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    for (const auto& block : p.layout.blocks) {
      if (clamp && (*clamp)(row, block.offset)) continue;
      switch (block.type) {
        case model::UnitType::continuous:
          v(row, block.offset) = input(row, block.offset) + pre.sigma(block.offset) * rng.normal();
          break;
        case model::UnitType::binary:
          v(row, block.offset) = rng.bernoulli(sigmoid(input(row, block.offset))) ? 1.0 : 0.0;
          break;
        case model::UnitType::onehot: {
          double max_u = input(row, block.offset);
          for (int j = 1; j < block.width; ++j)
            max_u = std::max(max_u, input(row, block.offset + j));
          double total = 0.0;
          for (int j = 0; j < block.width; ++j)
            total += std::exp(input(row, block.offset + j) - max_u);
          const double r = rng.uniform() * total;
          double cum = 0.0;
          int pick = block.width - 1;
          for (int j = 0; j < block.width; ++j) {
            cum += std::exp(input(row, block.offset + j) - max_u);
            if (r < cum) {
              pick = j;
              break;
            }
          }
          for (int j = 0; j < block.width; ++j) v(row, block.offset + j) = 0.0;
          v(row, block.offset + pick) = 1.0;
          break;
        }
      }
    }
  }
}

}  // namespace

void sample_visible_given_hidden(const CrbmParams& p, const Precomp& pre, const MatRX& h,
                                 MatRX& v, const MatRXu8* clamp, std::vector<Rng>& rngs,
                                 GibbsWorkspace& ws) {
  const std::size_t n = static_cast<std::size_t>(v.rows());
  ws.resize(v.rows(), p.n_visible(), p.n_hidden);
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    visible_inputs(p, pre, h, ws.psi, ws.scaled, b, e);
    sample_visible_rows(p, pre, ws.psi, v, clamp, rngs, b, e);
  });
}

void gibbs(const CrbmParams& p, const Precomp& pre, MatRX& v, const MatRXu8* clamp, int steps,
           std::vector<Rng>& rngs, GibbsWorkspace& ws) {
  const std::size_t n = static_cast<std::size_t>(v.rows());
  if (rngs.size() < n) fail("DimensionMismatch", "gibbs: one rng stream per row required");
  ws.resize(v.rows(), p.n_visible(), p.n_hidden);
  for (int step = 0; step < steps; ++step) {
    parallel_blocks(n, [&](std::size_t b, std::size_t e) {
      hidden_locations(p, pre, v, ws.hid_loc, ws.scaled, b, e);
      sample_hidden_rows(p, pre, ws.hid_loc, ws.hidden, rngs, b, e);
    });
    sample_visible_given_hidden(p, pre, ws.hidden, v, clamp, rngs, ws);
  }
}

MatRX impute(const CrbmParams& p, const MatRX& v, const MatRXu8& observed, int steps,
             std::vector<Rng>& rngs) {
  MatRX out = v;
  const Precomp pre = precompute(p);
  GibbsWorkspace ws;
  gibbs(p, pre, out, &observed, steps, rngs, ws);
  return out;
}

MatRX hidden_conditional_means(const CrbmParams& p, const MatRX& v) {
  const Precomp pre = precompute(p);
  const std::size_t n = static_cast<std::size_t>(v.rows());
  MatRX hloc(v.rows(), p.n_hidden);
  MatRX scaled(v.rows(), p.n_visible());
  MatRX means(v.rows(), p.n_hidden);
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    hidden_locations(p, pre, v, hloc, scaled, b, e);
    for (std::size_t i = b; i < e; ++i)
      for (int mu = 0; mu < p.n_hidden; ++mu)
        means(static_cast<Eigen::Index>(i), mu) =
            TruncatedNormal{hloc(static_cast<Eigen::Index>(i), mu), pre.eps(mu)}.mean();
  });
  return means;
}

HiddenConditional hidden_conditional(const CrbmParams& p, const VectorXd& v) {
  if (v.size() != p.n_visible()) fail("DimensionMismatch", "hidden_conditional");
  const Precomp pre = precompute(p);
  HiddenConditional out;
  out.loc = p.hid_loc;
  out.loc.noalias() += p.weights.transpose() * (v.array() * pre.inv_sigma2).matrix();
  out.scale = pre.eps.matrix();
  out.mean.resize(p.n_hidden);
  for (int mu = 0; mu < p.n_hidden; ++mu)
    out.mean(mu) = TruncatedNormal{out.loc(mu), out.scale(mu)}.mean();
  return out;
}

VectorXd visible_input_one(const CrbmParams& p, const VectorXd& h) {
  if (h.size() != p.n_hidden) fail("DimensionMismatch", "visible_input_one");
  const Precomp pre = precompute(p);
  VectorXd u = p.vis_loc;
  u.noalias() += p.weights * (h.array() * pre.inv_eps2).matrix();
  return u;
}

MatRX visible_conditional_means(const CrbmParams& p, const MatRX& h) {
  const Precomp pre = precompute(p);
  const std::size_t n = static_cast<std::size_t>(h.rows());
  MatRX input(h.rows(), p.n_visible());
  MatRX scaled(h.rows(), std::max(p.n_visible(), p.n_hidden));
  MatRX means(h.rows(), p.n_visible());
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    visible_inputs(p, pre, h, input, scaled, b, e);
    for (std::size_t ii = b; ii < e; ++ii) {
      const Eigen::Index i = static_cast<Eigen::Index>(ii);
      for (const auto& block : p.layout.blocks) {
        switch (block.type) {
          case model::UnitType::continuous:
            means(i, block.offset) = input(i, block.offset);
            break;
          case model::UnitType::binary:
            means(i, block.offset) = sigmoid(input(i, block.offset));
            break;
          case model::UnitType::onehot: {
            double max_u = input(i, block.offset);
            for (int j = 1; j < block.width; ++j)
              max_u = std::max(max_u, input(i, block.offset + j));
            double total = 0.0;
            for (int j = 0; j < block.width; ++j)
              total += std::exp(input(i, block.offset + j) - max_u);
            for (int j = 0; j < block.width; ++j)
              means(i, block.offset + j) = std::exp(input(i, block.offset + j) - max_u) / total;
            break;
          }
        }
      }
    }
  });
  return means;
}

double energy(const CrbmParams& p, const VectorXd& v, const VectorXd& h) {
  if (v.size() != p.n_visible() || h.size() != p.n_hidden) fail("DimensionMismatch", "energy");
  const Precomp pre = precompute(p);
  double vis = 0.0;
  for (const auto& block : p.layout.blocks) {
    for (int j = 0; j < block.width; ++j) {
      const int idx = block.offset + j;
      if (block.type == model::UnitType::continuous) {
        const double d = v(idx) - p.vis_loc(idx);
        vis += -d * d * 0.5 * pre.inv_sigma2(idx);
      } else {
        vis += p.vis_loc(idx) * v(idx);
      }
    }
  }
  double hid = 0.0;
  for (int mu = 0; mu < p.n_hidden; ++mu) {
    const double d = h(mu) - p.hid_loc(mu);
    hid += -d * d * 0.5 * pre.inv_eps2(mu);
  }
  const double coupling =
      ((v.array() * pre.inv_sigma2).matrix().transpose() * p.weights *
       (h.array() * pre.inv_eps2).matrix())(0);
  return -(vis + hid + coupling);
}

VectorXd free_energy(const CrbmParams& p, const MatRX& v) {
  const Precomp pre = precompute(p);
  const Eigen::Index n = v.rows();
  MatRX hloc(n, p.n_hidden);
  MatRX scaled(n, p.n_visible());
  VectorXd out(n);
  parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t bb, std::size_t ee) {
    hidden_locations(p, pre, v, hloc, scaled, bb, ee);
    for (std::size_t ii = bb; ii < ee; ++ii) {
      const Eigen::Index i = static_cast<Eigen::Index>(ii);
      double vis = 0.0;
      for (const auto& block : p.layout.blocks) {
        for (int j = 0; j < block.width; ++j) {
          const int idx = block.offset + j;
          if (block.type == model::UnitType::continuous) {
            const double d = v(i, idx) - p.vis_loc(idx);
            vis += -d * d * 0.5 * pre.inv_sigma2(idx);
          } else {
            vis += p.vis_loc(idx) * v(i, idx);
          }
        }
      }
      double hid = 0.0;
      for (int mu = 0; mu < p.n_hidden; ++mu) {
        const double m = hloc(i, mu);
        const double b = p.hid_loc(mu);
        hid += (m * m - b * b) * 0.5 * pre.inv_eps2(mu) + p.hid_log_eps(mu) + kHalfLog2Pi +
               log_ndtr(m / pre.eps(mu));
      }
      out(i) = -(vis + hid);
    }
  });
  return out;
}

double free_energy_one(const CrbmParams& p, const VectorXd& v) {
  MatRX m(1, v.size());
  m.row(0) = v.transpose();
  return free_energy(p, m)(0);
}

Moments Moments::zeros(const CrbmParams& p) {
  Moments m;
  m.d_weights = MatrixXd::Zero(p.n_visible(), p.n_hidden);
  m.d_vis_loc = VectorXd::Zero(p.n_visible());
  m.d_vis_log_sigma = VectorXd::Zero(p.n_visible());
  m.d_hid_loc = VectorXd::Zero(p.n_hidden);
  return m;
}

VectorXd Moments::flatten(const CrbmParams& p) const {
  VectorXd flat(p.flat_size());
  Eigen::Index at = 0;
  flat.segment(at, d_weights.size()) =
      Eigen::Map<const VectorXd>(d_weights.data(), d_weights.size());
  at += d_weights.size();
  flat.segment(at, d_vis_loc.size()) = d_vis_loc;
  at += d_vis_loc.size();
  for (int j : p.continuous_units()) flat(at++) = d_vis_log_sigma(j);
  flat.segment(at, d_hid_loc.size()) = d_hid_loc;
  return flat;
}

Moments neg_free_energy_grad(const CrbmParams& p, const MatRX& v, const VectorXd* row_weights) {
  const Precomp pre = precompute(p);
  const Eigen::Index n = v.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  MatRX hmean = hidden_conditional_means(p, v);
  // Scale columns by the fixed inverse squared scales.
  MatRX hme = (hmean.array().rowwise() * pre.inv_eps2_row).matrix();
  MatRX vs = (v.array().rowwise() * pre.inv_sigma2_row).matrix();

  MatRX vs_weighted;
  const MatRX* vs_for_w = &vs;
  if (row_weights) {
    vs_weighted = vs.array().colwise() * row_weights->array();
    vs_for_w = &vs_weighted;
  }

  Moments m = Moments::zeros(p);
  m.d_weights.noalias() = vs_for_w->transpose() * hme;
  m.d_weights *= inv_n;

  // Row weights enter every term; build the weighted averaging vector once.
  VectorXd w = row_weights ? *row_weights : VectorXd::Ones(n);

  // d/d a_j: (v - a)/sigma^2 for continuous, v for discrete units.
  for (const auto& block : p.layout.blocks) {
    for (int j = 0; j < block.width; ++j) {
      const int idx = block.offset + j;
      if (block.type == model::UnitType::continuous) {
        m.d_vis_loc(idx) =
            inv_n * (w.array() * (v.col(idx).array() - p.vis_loc(idx)) * pre.inv_sigma2(idx)).sum();
      } else {
        m.d_vis_loc(idx) = inv_n * (w.array() * v.col(idx).array()).sum();
      }
    }
  }

  // d/d log sigma_j (continuous only): (v-a)^2/sigma^2 - 2 v <c_j>/sigma^2,
  // with <c_j> = sum_mu W_{j,mu} <h_mu>/eps_mu^2.
  const auto continuous = p.continuous_units();
  if (!continuous.empty()) {
    MatRX c = hme * p.weights.transpose();  // n x n_vis
    for (int idx : continuous) {
      const auto dv = v.col(idx).array() - p.vis_loc(idx);
      m.d_vis_log_sigma(idx) =
          inv_n * (w.array() *
                   (dv * dv - 2.0 * v.col(idx).array() * c.col(idx).array()) *
                   pre.inv_sigma2(idx))
                      .sum();
    }
  }

  for (int mu = 0; mu < p.n_hidden; ++mu)
    m.d_hid_loc(mu) =
        inv_n * (w.array() * (hmean.col(mu).array() - p.hid_loc(mu)) * pre.inv_eps2(mu)).sum();
  return m;
}

double brute_force_logZ(const CrbmParams& p) {
  double n_states = 1.0;
  for (const auto& block : p.layout.blocks) {
    if (block.type == model::UnitType::continuous)
      fail("TooLarge", "brute_force_logZ: continuous visible unit");
    n_states *= block.type == model::UnitType::binary ? 2.0 : static_cast<double>(block.width);
    if (n_states > static_cast<double>(1 << 20)) fail("TooLarge", "brute_force_logZ: > 2^20 states");
  }
  const std::size_t total = static_cast<std::size_t>(n_states);
  const auto& blocks = p.layout.blocks;

  double max_neg_f = -std::numeric_limits<double>::infinity();
  std::vector<double> neg_f(total);
  constexpr std::size_t kBatch = 4096;
  std::vector<int> state(blocks.size(), 0);
  std::size_t emitted = 0;
  MatRX batch(static_cast<Eigen::Index>(std::min(kBatch, total)), p.n_visible());
  std::size_t batch_fill = 0;
  std::size_t batch_start = 0;
  auto flush = [&]() {
    if (batch_fill == 0) return;
    VectorXd f = free_energy(p, batch.topRows(static_cast<Eigen::Index>(batch_fill)));
    for (std::size_t i = 0; i < batch_fill; ++i) {
      neg_f[batch_start + i] = -f(static_cast<Eigen::Index>(i));
      max_neg_f = std::max(max_neg_f, neg_f[batch_start + i]);
    }
    batch_start += batch_fill;
    batch_fill = 0;
  };
  for (;;) {
    // Materialize the current state.
    batch.row(static_cast<Eigen::Index>(batch_fill)).setZero();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto& block = blocks[k];
      if (block.type == model::UnitType::binary)
        batch(static_cast<Eigen::Index>(batch_fill), block.offset) = state[k];
      else
        batch(static_cast<Eigen::Index>(batch_fill), block.offset + state[k]) = 1.0;
    }
    ++batch_fill;
    ++emitted;
    if (batch_fill == kBatch || emitted == total) flush();
    if (emitted == total) break;
    // Odometer increment.
    for (std::size_t k = 0;; ++k) {
      const int arity = blocks[k].type == model::UnitType::binary ? 2 : blocks[k].width;
      if (++state[k] < arity) break;
      state[k] = 0;
    }
  }
  double sum = 0.0;
  for (double x : neg_f) sum += std::exp(x - max_neg_f);
  return max_neg_f + std::log(sum);
}

// --- persistence ---

namespace {
void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i32(std::ofstream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_str(std::ofstream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_vec(std::ofstream& out, const VectorXd& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
}
std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::int32_t read_i32(std::ifstream& in) {
  std::int32_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::string read_str(std::ifstream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}
void read_vec(std::ifstream& in, VectorXd& v, Eigen::Index n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(n)));
}

constexpr char kMagic[8] = {'T', 'R', 'J', 'S', 'C', 'R', 'B', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_params(const CrbmParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("MissingInput", "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, 1);  // byte order: little-endian
  write_u64(out, p.schema_hash);
  write_u32(out, static_cast<std::uint32_t>(p.n_hidden));
  write_u32(out, static_cast<std::uint32_t>(p.layout.blocks.size()));
  for (const auto& b : p.layout.blocks) {
    write_str(out, b.variable);
    write_i32(out, b.var_index);
    write_u32(out, static_cast<std::uint32_t>(b.type));
    write_u32(out, static_cast<std::uint32_t>(b.group));
    write_i32(out, b.width);
  }
  VectorXd wvec = Eigen::Map<const VectorXd>(p.weights.data(), p.weights.size());
  write_vec(out, wvec);
  write_vec(out, p.vis_loc);
  write_vec(out, p.vis_log_sigma);
  write_vec(out, p.hid_loc);
  write_vec(out, p.hid_log_eps);
  write_u32(out, static_cast<std::uint32_t>(p.metadata.size()));
  for (const auto& [k, v] : p.metadata) {
    write_str(out, k);
    write_str(out, v);
  }
}

CrbmParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("MissingInput", "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) fail("ConfigInvalid", "bad model magic");
  if (read_u32(in) != kVersion) fail("ConfigInvalid", "unsupported model version");
  if (read_u32(in) != 1) fail("ConfigInvalid", "unsupported byte order");
  CrbmParams p;
  p.schema_hash = read_u64(in);
  p.n_hidden = static_cast<int>(read_u32(in));
  const std::uint32_t n_blocks = read_u32(in);
  std::vector<model::Block> blocks;
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    model::Block b;
    b.variable = read_str(in);
    b.var_index = read_i32(in);
    b.type = static_cast<model::UnitType>(read_u32(in));
    b.group = static_cast<model::BlockGroup>(read_u32(in));
    b.width = read_i32(in);
    blocks.push_back(std::move(b));
  }
  p.layout = make_layout(std::move(blocks));
  const Eigen::Index nv = p.layout.total_width;
  VectorXd wvec;
  read_vec(in, wvec, nv * p.n_hidden);
  p.weights = Eigen::Map<const MatrixXd>(wvec.data(), nv, p.n_hidden);
  read_vec(in, p.vis_loc, nv);
  read_vec(in, p.vis_log_sigma, nv);
  read_vec(in, p.hid_loc, p.n_hidden);
  read_vec(in, p.hid_log_eps, p.n_hidden);
  const std::uint32_t n_meta = read_u32(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = read_str(in);
    p.metadata[k] = read_str(in);
  }
  if (!in) fail("ConfigInvalid", "truncated model file " + path);
  return p;
}

std::string export_params_text(const CrbmParams& p) {
  std::ostringstream out;
  char buf[40];
  auto hex = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%a", x);
    return std::string(buf);
  };
  out << "crbm v" << kVersion << " schema_hash=" << p.schema_hash << " n_hidden=" << p.n_hidden
      << " n_visible=" << p.n_visible() << "\n";
  for (const auto& b : p.layout.blocks)
    out << "block " << b.variable << " type=" << static_cast<int>(b.type)
        << " group=" << static_cast<int>(b.group) << " offset=" << b.offset
        << " width=" << b.width << "\n";
  for (Eigen::Index j = 0; j < p.weights.rows(); ++j) {
    out << "W " << j;
    for (int mu = 0; mu < p.n_hidden; ++mu) out << " " << hex(p.weights(j, mu));
    out << "\n";
  }
  auto dump_vec = [&](const char* name, const VectorXd& v) {
    out << name;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << " " << hex(v(i));
    out << "\n";
  };
  dump_vec("vis_loc", p.vis_loc);
  dump_vec("vis_log_sigma", p.vis_log_sigma);
  dump_vec("hid_loc", p.hid_loc);
  dump_vec("hid_log_eps", p.hid_log_eps);
  for (const auto& [k, v] : p.metadata) out << "meta " << k << " = " << v << "\n";
  return out.str();
}

}  // namespace trajsim::crbm
