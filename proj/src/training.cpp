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

#include "trajsim/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"

namespace trajsim::train {

std::pair<double, double> objective_weights(const TrainingConfig& cfg) {
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0) fail("ConfigInvalid", "gamma outside [0,1]");
  return {cfg.gamma, 1.0 - cfg.gamma};
}

double lr_schedule(int epoch, const TrainingConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) fail("ConfigInvalid", "epoch outside schedule");
  const double frac = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
  return cfg.lr_initial + (cfg.lr_final - cfg.lr_initial) * frac;
}

AdamState AdamState::init(Eigen::Index n) {
  AdamState s;
  s.m = VectorXd::Zero(n);
  s.v = VectorXd::Zero(n);
  return s;
}

void adam_step(VectorXd& theta, const VectorXd& grad, AdamState& state, double lr, double beta1,
               double beta2) {
  ++state.step;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  theta.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + 1e-8);
}

PersistentChains init_chains(const crbm::CrbmParams& params, int n_chains, std::uint64_t seed) {
  PersistentChains chains;
  chains.v.setZero(n_chains, params.n_visible());
  chains.rngs.reserve(static_cast<std::size_t>(n_chains));
  for (int i = 0; i < n_chains; ++i)
    chains.rngs.emplace_back(derive_seed(seed, "train.chain", static_cast<std::uint64_t>(i)));
  // One bias-driven visible draw (h = 0) seeds every chain.
  const crbm::Precomp pre = crbm::precompute(params);
  const MatRX h0 = MatRX::Zero(n_chains, params.n_hidden);
  crbm::GibbsWorkspace ws;
  crbm::sample_visible_given_hidden(params, pre, h0, chains.v, nullptr, chains.rngs, ws);
  return chains;
}

MatRX adversary_features(const crbm::CrbmParams& params, const MatRX& v) {
  return crbm::hidden_conditional_means(params, v);
}

forest::Forest refresh_adversary(const crbm::CrbmParams& params, const MatRX& data_batch,
                                 const MatRX& fantasy_batch, const AdversaryConfig& cfg,
                                 std::uint64_t seed) {
  if (data_batch.rows() == 0 || fantasy_batch.rows() == 0)
    fail("EmptyDataset", "refresh_adversary: empty batch");
  const MatRX feats_data = adversary_features(params, data_batch);
  const MatRX feats_fantasy = adversary_features(params, fantasy_batch);
  MatRX x(feats_data.rows() + feats_fantasy.rows(), feats_data.cols());
  x.topRows(feats_data.rows()) = feats_data;
  x.bottomRows(feats_fantasy.rows()) = feats_fantasy;
  MatRX y(x.rows(), 1);
  y.topRows(feats_data.rows()).setOnes();
  y.bottomRows(feats_fantasy.rows()).setZero();
  forest::ForestConfig fc;
  fc.n_trees = cfg.n_trees;
  fc.max_depth = cfg.max_depth;
  fc.min_leaf = 1;
  fc.feature_fraction = 1.0;
  fc.classification = true;
  fc.seed = seed;
  forest::Forest critic;
  critic.fit(x, y, fc);
  return critic;
}

namespace {
double clip_prob(double p) { return std::clamp(p, 0.01, 0.99); }
}  // namespace

VectorXd adversary_weights(const forest::Forest& critic, const MatRX& fantasy_features) {
  if (!critic.trained()) fail("UntrainedAdversary", "adversary_weights");
  VectorXd w(fantasy_features.rows());
  for (Eigen::Index i = 0; i < fantasy_features.rows(); ++i)
    w(i) = 2.0 * clip_prob(critic.predict_scalar(fantasy_features.row(i).data()));
  const double mean = w.mean();
  if (mean > 0.0) w /= mean;
  return w;
}

crbm::Moments ml_gradient(const crbm::CrbmParams& params, const MatRX& imputed_batch,
                          PersistentChains& chains, int mc_steps) {
  const crbm::Precomp pre = crbm::precompute(params);
  crbm::GibbsWorkspace ws;
  crbm::gibbs(params, pre, chains.v, nullptr, mc_steps, chains.rngs, ws);
  const crbm::Moments data = crbm::neg_free_energy_grad(params, imputed_batch);
  const crbm::Moments fantasy = crbm::neg_free_energy_grad(params, chains.v);
  crbm::Moments g = data;
  g.d_weights -= fantasy.d_weights;
  g.d_vis_loc -= fantasy.d_vis_loc;
  g.d_vis_log_sigma -= fantasy.d_vis_log_sigma;
  g.d_hid_loc -= fantasy.d_hid_loc;
  return g;
}

crbm::Moments adversarial_gradient(const crbm::CrbmParams& params, const MatRX& imputed_batch,
                                   const MatRX& fantasy, const forest::Forest& critic) {
  if (!critic.trained()) fail("UntrainedAdversary", "adversarial_gradient");
  const MatRX fantasy_feats = adversary_features(params, fantasy);
  const VectorXd w = adversary_weights(critic, fantasy_feats);
  const crbm::Moments data = crbm::neg_free_energy_grad(params, imputed_batch);
  const crbm::Moments weighted = crbm::neg_free_energy_grad(params, fantasy, &w);
  crbm::Moments g = data;
  g.d_weights -= weighted.d_weights;
  g.d_vis_loc -= weighted.d_vis_loc;
  g.d_vis_log_sigma -= weighted.d_vis_log_sigma;
  g.d_hid_loc -= weighted.d_hid_loc;
  return g;
}

std::pair<double, double> monitor_divergences(const forest::Forest& critic,
                                              const MatRX& data_features,
                                              const MatRX& fantasy_features) {
  if (!critic.trained()) fail("UntrainedAdversary", "monitor_divergences");
  auto mean_logit = [&](const MatRX& feats) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
      const double p = clip_prob(critic.predict_scalar(feats.row(i).data()));
      sum += std::log(p / (1.0 - p));
    }
    return sum / static_cast<double>(feats.rows());
  };
  return {mean_logit(data_features), -mean_logit(fantasy_features)};
}

void write_monitor_csv(const std::string& path, const Monitor& monitor) {
  CsvWriter out(path, {"epoch", "kl", "reverse_kl", "recon_error", "adv_accuracy"});
  for (const auto& row : monitor)
    out.row({std::to_string(row.epoch), fmt_double(row.kl), fmt_double(row.reverse_kl),
             fmt_double(row.recon_error), fmt_double(row.adv_accuracy)});
}

namespace {

// Visible biases and scales from observed training marginals; weights get
// small Gaussian noise (standard starting point for RBM training).
void init_params(crbm::CrbmParams& p, const pipeline::Dataset& data,
                 const TrainingConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "train.init"));
  for (Eigen::Index j = 0; j < p.weights.rows(); ++j)
    for (int mu = 0; mu < p.n_hidden; ++mu)
      p.weights(j, mu) = cfg.weight_init_std * rng.normal();

  const Eigen::Index n = data.v.rows();
  for (const auto& block : p.layout.blocks) {
    // Observed statistics per coordinate.
    std::vector<double> mean(static_cast<std::size_t>(block.width), 0.0);
    std::vector<double> sq(static_cast<std::size_t>(block.width), 0.0);
    double count = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!data.mask(i, block.offset)) continue;
      count += 1.0;
      for (int j = 0; j < block.width; ++j) {
        const double v = data.v(i, block.offset + j);
        mean[static_cast<std::size_t>(j)] += v;
        sq[static_cast<std::size_t>(j)] += v * v;
      }
    }
    for (int j = 0; j < block.width; ++j) {
      double m = count > 0 ? mean[static_cast<std::size_t>(j)] / count : 0.0;
      switch (block.type) {
        case model::UnitType::continuous: {
          p.vis_loc(block.offset) = m;
          double var = count > 1 ? sq[0] / count - m * m : 1.0;
          p.vis_log_sigma(block.offset) = 0.5 * std::log(std::max(var, 1e-4));
          break;
        }
        case model::UnitType::binary: {
          const double q = std::clamp(m, 1e-3, 1.0 - 1e-3);
          p.vis_loc(block.offset) = std::log(q / (1.0 - q));
          break;
        }
        case model::UnitType::onehot: {
          const double q = std::clamp(m, 1e-6, 1.0);
          p.vis_loc(block.offset + j) = std::log(q);
          break;
        }
      }
      if (block.type != model::UnitType::onehot) break;  // width-1 blocks done
    }
  }
}

}  // namespace

FitResult fit(const pipeline::Dataset& train_data, const pipeline::Dataset& validation_data,
              const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  if (train_data.n() == 0) fail("EmptyDataset", "fit: empty training set");
  const auto [w_ml, w_adv] = objective_weights(cfg);

  crbm::CrbmParams params = crbm::CrbmParams::zeros(train_data.layout, cfg.n_hidden);
  init_params(params, train_data, cfg);

  PersistentChains chains = init_chains(params, cfg.batch_size, cfg.seed);
  AdamState adam = AdamState::init(params.flat_size());

  const Eigen::Index n = train_data.n();
  const int n_batches = static_cast<int>((n + cfg.batch_size - 1) / cfg.batch_size);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  Monitor monitor;
  forest::Forest critic;
  crbm::GibbsWorkspace chain_ws;
  MatRX batch;
  MatRXu8 batch_mask;

  const bool use_adversary = w_adv > 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    {
      Rng shuffle(derive_seed(cfg.seed, "train.order", static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle.below(i)]);
    }

    for (int b = 0; b < n_batches; ++b) {
      const Eigen::Index lo = static_cast<Eigen::Index>(b) * cfg.batch_size;
      const Eigen::Index hi = std::min<Eigen::Index>(lo + cfg.batch_size, n);
      const Eigen::Index bs = hi - lo;
      batch.resize(bs, train_data.v.cols());
      batch_mask.resize(bs, train_data.v.cols());
      for (Eigen::Index i = 0; i < bs; ++i) {
        batch.row(i) = train_data.v.row(order[static_cast<std::size_t>(lo + i)]);
        batch_mask.row(i) = train_data.mask.row(order[static_cast<std::size_t>(lo + i)]);
      }
      std::vector<Rng> impute_rngs;
      impute_rngs.reserve(static_cast<std::size_t>(bs));
      for (Eigen::Index i = 0; i < bs; ++i)
        impute_rngs.emplace_back(derive_seed(cfg.seed, "train.impute",
                                             static_cast<std::uint64_t>(epoch) * 1000003ull +
                                                 static_cast<std::uint64_t>(b),
                                             static_cast<std::uint64_t>(i)));
      const MatRX imputed =
          crbm::impute(params, batch, batch_mask, cfg.mc_steps_imputation, impute_rngs);

      // Shared negative phase: advance the persistent chains once.
      const crbm::Precomp pre = crbm::precompute(params);
      crbm::gibbs(params, pre, chains.v, nullptr, cfg.mc_steps_sampling, chains.rngs, chain_ws);

      if (use_adversary && b == 0) {
        // Refresh once per epoch on the first (imputed) batch vs fantasy.
        critic = refresh_adversary(params, imputed, chains.v, cfg.adversary,
                                   derive_seed(cfg.seed, "train.adversary",
                                               static_cast<std::uint64_t>(epoch)));
      }

      const crbm::Moments data_m = crbm::neg_free_energy_grad(params, imputed);
      const crbm::Moments fantasy_m = crbm::neg_free_energy_grad(params, chains.v);
      VectorXd ascent = data_m.flatten(params);
      if (use_adversary) {
        const MatRX fantasy_feats = adversary_features(params, chains.v);
        const VectorXd w = adversary_weights(critic, fantasy_feats);
        const crbm::Moments weighted_m = crbm::neg_free_energy_grad(params, chains.v, &w);
        ascent -= w_ml * fantasy_m.flatten(params) + w_adv * weighted_m.flatten(params);
      } else {
        ascent -= fantasy_m.flatten(params);
      }

      VectorXd theta = params.flatten();
      VectorXd descent = -ascent;
      adam_step(theta, descent, adam, lr, cfg.beta1, cfg.beta2);
      params.unflatten(theta);
    }

    MonitorRow row;
    row.epoch = epoch;
    if (validation_data.n() > 0) {
      std::vector<Rng> val_rngs;
      for (Eigen::Index i = 0; i < validation_data.n(); ++i)
        val_rngs.emplace_back(derive_seed(cfg.seed, "train.monitor",
                                          static_cast<std::uint64_t>(epoch),
                                          static_cast<std::uint64_t>(i)));
      const MatRX val_imputed = crbm::impute(params, validation_data.v, validation_data.mask,
                                             cfg.mc_steps_imputation, val_rngs);
      // Reconstruction error on observed coordinates through one
      // deterministic mean pass.
      const MatRX hmean = crbm::hidden_conditional_means(params, val_imputed);
      const MatRX vmean = crbm::visible_conditional_means(params, hmean);
      double err = 0.0;
      double cnt = 0.0;
      for (Eigen::Index i = 0; i < validation_data.n(); ++i)
        for (Eigen::Index j = 0; j < validation_data.v.cols(); ++j)
          if (validation_data.mask(i, j)) {
            const double d = vmean(i, j) - validation_data.v(i, j);
            err += d * d;
            cnt += 1.0;
          }
      row.recon_error = cnt > 0 ? std::sqrt(err / cnt) : 0.0;

      if (use_adversary && critic.trained()) {
        const MatRX val_feats = adversary_features(params, val_imputed);
        const MatRX fan_feats = adversary_features(params, chains.v);
        std::tie(row.kl, row.reverse_kl) = monitor_divergences(critic, val_feats, fan_feats);
        double acc_data = 0.0, acc_fan = 0.0;
        for (Eigen::Index i = 0; i < val_feats.rows(); ++i)
          acc_data += critic.predict_scalar(val_feats.row(i).data()) > 0.5 ? 1.0 : 0.0;
        for (Eigen::Index i = 0; i < fan_feats.rows(); ++i)
          acc_fan += critic.predict_scalar(fan_feats.row(i).data()) <= 0.5 ? 1.0 : 0.0;
        row.adv_accuracy = 0.5 * (acc_data / static_cast<double>(val_feats.rows()) +
                                  acc_fan / static_cast<double>(fan_feats.rows()));
      }
    }
    monitor.push_back(row);

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
        (epoch + 1) % cfg.checkpoint_every == 0) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      crbm::save_params(params, cfg.checkpoint_dir + "/checkpoint_" + std::to_string(epoch + 1) +
                                    ".crbm");
    }
    if (on_epoch) on_epoch(epoch, params, row);
  }

  FitResult result;
  result.params = std::move(params);
  result.monitor = std::move(monitor);
  return result;
}

}  // namespace trajsim::train
