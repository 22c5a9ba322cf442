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

#ifndef TRAJSIM_TRAINING_HPP
#define TRAJSIM_TRAINING_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "trajsim/crbm.hpp"
#include "trajsim/forest.hpp"
#include "trajsim/pipeline.hpp"

namespace trajsim::train {

struct AdversaryConfig {
  int n_trees = 5;
  int max_depth = 5;
};

struct TrainingConfig {
  int epochs = 2000;
  int batch_size = 100;
  double lr_initial = 0.005;
  double lr_final = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double gamma = 0.3;  // likelihood weight in C = -gamma*L - (1-gamma)*A
  int mc_steps_sampling = 50;
  int mc_steps_imputation = 2;
  AdversaryConfig adversary;
  std::uint64_t seed = 0;
  int n_hidden = 50;
  double weight_init_std = 0.01;
  int checkpoint_every = 0;  // epochs; 0 disables
  std::string checkpoint_dir;
};

/// (gamma, 1-gamma): the objective mixes log-likelihood and adversarial
/// terms with these weights.
std::pair<double, double> objective_weights(const TrainingConfig& cfg);

/// Linear decay from lr_initial to lr_final over the run.
double lr_schedule(int epoch, const TrainingConfig& cfg);

struct AdamState {
  VectorXd m, v;
  long step = 0;
  static AdamState init(Eigen::Index n);
};

/// Standard bias-corrected descent step, epsilon guard 1e-8.
void adam_step(VectorXd& theta, const VectorXd& grad, AdamState& state, double lr, double beta1,
               double beta2);

/// Fantasy particles persisted across minibatches (stochastic maximum
/// likelihood), one RNG stream per chain.
struct PersistentChains {
  MatRX v;
  std::vector<Rng> rngs;
};

PersistentChains init_chains(const crbm::CrbmParams& params, int n_chains, std::uint64_t seed);

/// Critic features: hidden conditional means.
MatRX adversary_features(const crbm::CrbmParams& params, const MatRX& v);

/// 5 bootstrap CART trees (Gini, class fraction leaves) on data=1 vs
/// fantasy=0 features.
forest::Forest refresh_adversary(const crbm::CrbmParams& params, const MatRX& data_batch,
                                 const MatRX& fantasy_batch, const AdversaryConfig& cfg,
                                 std::uint64_t seed);

/// Fantasy reweighting: w = 2 * clip(p_hat, .01, .99), normalized to mean 1.
VectorXd adversary_weights(const forest::Forest& critic, const MatRX& fantasy_features);

/// <-dF/dtheta>_data - <-dF/dtheta>_fantasy, with fantasy particles first
/// advanced mc_steps from their persisted state. Batch must be imputed.
crbm::Moments ml_gradient(const crbm::CrbmParams& params, const MatRX& imputed_batch,
                          PersistentChains& chains, int mc_steps);

/// Critic-reweighted moment difference (fantasy taken as-is; throws
/// UntrainedAdversary when the critic has not been fitted).
crbm::Moments adversarial_gradient(const crbm::CrbmParams& params, const MatRX& imputed_batch,
                                   const MatRX& fantasy, const forest::Forest& critic);

/// Critic-based density-ratio estimates on clipped probabilities:
/// KL ~ mean_data log(p/(1-p)), reverse KL ~ -mean_fantasy log(p/(1-p)).
std::pair<double, double> monitor_divergences(const forest::Forest& critic,
                                              const MatRX& data_features,
                                              const MatRX& fantasy_features);

struct MonitorRow {
  int epoch = 0;
  double kl = 0.0;
  double reverse_kl = 0.0;
  double recon_error = 0.0;
  double adv_accuracy = 0.0;
};
using Monitor = std::vector<MonitorRow>;

void write_monitor_csv(const std::string& path, const Monitor& monitor);

struct FitResult {
  crbm::CrbmParams params;
  Monitor monitor;
};

/// Per-epoch observer (used for exact-likelihood tracking in tests).
using EpochCallback = std::function<void(int, const crbm::CrbmParams&, const MonitorRow&)>;

/// Full training loop: per minibatch impute missing (2 steps) -> advance
/// persistent chains (50 steps) -> combined gradient gamma*ML +
/// (1-gamma)*adversarial -> ADAM with the linear schedule; the adversary
/// is refreshed once per epoch. Deterministic under cfg.seed.
FitResult fit(const pipeline::Dataset& train_data, const pipeline::Dataset& validation_data,
              const TrainingConfig& cfg, const EpochCallback& on_epoch = nullptr);

}  // namespace trajsim::train

#endif  // TRAJSIM_TRAINING_HPP
