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

#ifndef TRAJSIM_CRBM_HPP
#define TRAJSIM_CRBM_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trajsim/layout.hpp"
#include "trajsim/types.hpp"
#include "trajsim/util/rng.hpp"
#include "trajsim/util/truncnorm.hpp"

namespace trajsim::crbm {

// Energy of a joint state (v, h):
//   E(v, h) = -[ sum_j a_j(v_j) + sum_mu b_mu(h_mu)
//                + sum_{j,mu} W_{j,mu} (v_j / sigma_j^2)(h_mu / eps_mu^2) ]
// a_j is quadratic -(v - a_j)^2 / (2 sigma_j^2) for continuous units and
// linear a_j * v for binary/one-hot units; hidden units are normal with
// location b_mu and scale eps_mu, truncated below at zero (ReLU units).
struct CrbmParams {
  model::VisibleLayout layout;
  int n_hidden = 50;
  MatrixXd weights;        // n_visible x n_hidden
  VectorXd vis_loc;        // a_j
  VectorXd vis_log_sigma;  // log sigma_j; identically 0 for discrete units (fixed)
  VectorXd hid_loc;        // b_mu
  VectorXd hid_log_eps;    // log eps_mu; fixed at 0 (not trained)
  std::uint64_t schema_hash = 0;
  std::map<std::string, std::string> metadata;

  int n_visible() const { return layout.total_width; }

  /// Zero-weight parameters with unit scales.
  static CrbmParams zeros(model::VisibleLayout layout, int n_hidden);

  /// Coordinate indices of continuous visible units (the only units with
  /// a trainable scale).
  std::vector<int> continuous_units() const;

  // Trainable parameter vector: [vec(W) | vis_loc | vis_log_sigma
  // (continuous units only) | hid_loc]. Scales of discrete units and all
  // hidden eps are constants, not parameters.
  Eigen::Index flat_size() const;
  VectorXd flatten() const;
  void unflatten(const VectorXd& theta);
};

/// Builds a layout from bare blocks (type/width/group), used for toy
/// models; offsets and group widths are derived.
model::VisibleLayout make_layout(std::vector<model::Block> blocks);

/// Per-parameter scale caches, valid until the parameters change.
struct Precomp {
  Eigen::ArrayXd sigma, inv_sigma2;  // n_visible
  Eigen::ArrayXd eps, inv_eps2;      // n_hidden
  Eigen::Array<double, 1, Eigen::Dynamic> inv_sigma2_row, inv_eps2_row;
};
Precomp precompute(const CrbmParams& p);

/// Reusable buffers for batch Gibbs sweeps.
struct GibbsWorkspace {
  MatRX scaled, hid_loc, hidden, psi;
  void resize(Eigen::Index rows, int n_visible, int n_hidden);
};

// --- batch conditionals (rows = samples/chains) ---

/// Truncated-normal locations of p(h | v): b_mu + sum_j W_{j,mu} v_j / sigma_j^2.
void hidden_locations(const CrbmParams& p, const Precomp& pre, const MatRX& v, MatRX& out,
                      MatRX& scaled_buf, std::size_t row_begin, std::size_t row_end);

/// E[h | v] for all rows (analytic truncated-normal means).
MatRX hidden_conditional_means(const CrbmParams& p, const MatRX& v);

/// Total input a_j + psi_j to every visible unit given hidden states.
void visible_inputs(const CrbmParams& p, const Precomp& pre, const MatRX& h, MatRX& out,
                    MatRX& scaled_buf, std::size_t row_begin, std::size_t row_end);

/// Draws v ~ p(v | h) for unclamped coordinates (one visible half-sweep).
void sample_visible_given_hidden(const CrbmParams& p, const Precomp& pre, const MatRX& h,
                                 MatRX& v, const MatRXu8* clamp, std::vector<Rng>& rngs,
                                 GibbsWorkspace& ws);

/// One full block-Gibbs sweep count: h ~ p(h|v) then v ~ p(v|h) for
/// unclamped coordinates. Clamped coordinates are bit-identical on exit.
/// clamp may be null (nothing clamped); otherwise 1 = hold fixed, with all
/// bits of one variable's block agreeing.
void gibbs(const CrbmParams& p, const Precomp& pre, MatRX& v, const MatRXu8* clamp, int steps,
           std::vector<Rng>& rngs, GibbsWorkspace& ws);

/// Missing-data imputation: observed coordinates (mask = 1) are clamped,
/// missing coordinates sampled by `steps` Gibbs sweeps (2 during training).
MatRX impute(const CrbmParams& p, const MatRX& v, const MatRXu8& observed, int steps,
             std::vector<Rng>& rngs);

// --- single-sample views (tests, diagnostics) ---

struct HiddenConditional {
  VectorXd loc, scale, mean;
};
HiddenConditional hidden_conditional(const CrbmParams& p, const VectorXd& v);

/// Per-coordinate total input for one hidden vector; interpret per block:
/// Bernoulli(sigmoid(u)) / softmax(u over block) / Normal(u, sigma^2).
VectorXd visible_input_one(const CrbmParams& p, const VectorXd& h);

/// Conditional mean of every visible coordinate given per-row psi inputs.
MatRX visible_conditional_means(const CrbmParams& p, const MatRX& h);

double energy(const CrbmParams& p, const VectorXd& v, const VectorXd& h);

/// F(v) = -log integral_h exp(-E(v,h)); truncated-normal hidden units
/// integrate in closed form through the Gaussian tail integral.
VectorXd free_energy(const CrbmParams& p, const MatRX& v);
double free_energy_one(const CrbmParams& p, const VectorXd& v);

/// Averaged -dF/dtheta over rows, optionally row-weighted (weights are
/// used as given; callers normalize). Flat layout matches
/// CrbmParams::flatten.
struct Moments {
  MatrixXd d_weights;
  VectorXd d_vis_loc, d_vis_log_sigma, d_hid_loc;

  VectorXd flatten(const CrbmParams& p) const;
  static Moments zeros(const CrbmParams& p);
};
Moments neg_free_energy_grad(const CrbmParams& p, const MatRX& v,
                             const VectorXd* row_weights = nullptr);

/// Exact log partition function by enumeration over all discrete visible
/// states; requires an all-discrete visible layer with at most 2^20 states.
double brute_force_logZ(const CrbmParams& p);

// --- persistence ---

/// Versioned little-endian binary container (layout descriptor, all
/// parameter tensors, schema hash, metadata).
void save_params(const CrbmParams& p, const std::string& path);
CrbmParams load_params(const std::string& path);

/// Lossless text rendering (hexfloat) for diffing.
std::string export_params_text(const CrbmParams& p);

}  // namespace trajsim::crbm

#endif  // TRAJSIM_CRBM_HPP
