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

#include "trajsim/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"

namespace trajsim::sim {

namespace {

using model::BlockGroup;

// Decodes one temporal group of an encoded row to canonical numeric values
// (temporal variables are never categorical).
std::vector<double> decode_temporal(const crbm::CrbmParams& params, const schema::Schema& s,
                                    const pipeline::Transforms& transforms,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& row,
                                    BlockGroup group) {
  std::vector<double> out;
  for (const auto& block : params.layout.blocks) {
    if (block.group != group) continue;
    const auto& spec = s.at(static_cast<std::size_t>(block.var_index));
    std::vector<double> buf(static_cast<std::size_t>(block.width));
    for (int j = 0; j < block.width; ++j) buf[static_cast<std::size_t>(j)] = row(block.offset + j);
    const auto value = schema::decode_value(buf, spec, transforms.get(block.var_index));
    out.push_back(std::get<double>(value));
  }
  return out;
}

std::vector<schema::CanonicalValue> decode_statics_row(
    const crbm::CrbmParams& params, const schema::Schema& s,
    const pipeline::Transforms& transforms, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::vector<schema::CanonicalValue> out;
  for (const auto& block : params.layout.blocks) {
    if (block.group != BlockGroup::statics) continue;
    const auto& spec = s.at(static_cast<std::size_t>(block.var_index));
    std::vector<double> buf(static_cast<std::size_t>(block.width));
    for (int j = 0; j < block.width; ++j) buf[static_cast<std::size_t>(j)] = row(block.offset + j);
    out.push_back(schema::decode_value(buf, spec, transforms.get(block.var_index)));
  }
  return out;
}

int temporal_slot_count(const crbm::CrbmParams& params) {
  int n = 0;
  for (const auto& block : params.layout.blocks)
    if (block.group == BlockGroup::time_t) ++n;
  return n;
}

int dropout_slot_of(const schema::Schema& s) {
  const auto temporal = s.temporal_indices();
  const int dropout = s.dropout_index();
  for (std::size_t k = 0; k < temporal.size(); ++k)
    if (temporal[k] == dropout) return static_cast<int>(k);
  fail("UnknownVariable", "Dropout");
}

/// Rolls a batch of rows forward. On entry `v` holds the baseline in
/// [static | t] with `clamp` marking the coordinates to hold (observed
/// baseline); the t+1 group must be zero and unclamped.
void run_forward(const crbm::CrbmParams& params, const schema::Schema& s,
                 const pipeline::Transforms& transforms, MatRX& v, MatRXu8 clamp, int horizon,
                 const SimulateConfig& cfg, std::vector<Rng>& rngs, TrajectoryEnsemble& out) {
  const crbm::Precomp pre = crbm::precompute(params);
  crbm::GibbsWorkspace ws;
  const auto& layout = params.layout;
  const int ws_start = layout.group_start(BlockGroup::time_t);
  const int t1_start = layout.group_start(BlockGroup::time_t1);
  const int wt = layout.width_temporal;
  const Eigen::Index n = v.rows();
  const int n_slots = temporal_slot_count(params);

  out.values.assign(static_cast<std::size_t>(horizon) + 1, MatRX(n, n_slots));
  out.post_dropout.setZero(n, pipeline::kTimePoints);

  auto record = [&](int time, BlockGroup group) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto vals = decode_temporal(params, s, transforms, v.row(i), group);
      for (int k = 0; k < n_slots; ++k)
        out.values[static_cast<std::size_t>(time)](i, k) = vals[static_cast<std::size_t>(k)];
    }
  };

  // First pass samples t+1 and imputes any unobserved baseline entries.
  crbm::gibbs(params, pre, v, &clamp, cfg.gibbs_steps, rngs, ws);
  out.statics.clear();
  for (Eigen::Index i = 0; i < n; ++i)
    out.statics.push_back(decode_statics_row(params, s, transforms, v.row(i)));
  record(0, BlockGroup::time_t);

  for (int k = 1; k <= horizon; ++k) {
    record(k, BlockGroup::time_t1);
    if (k == horizon) break;
    // Shift: realized t+1 becomes the conditioning time point.
    v.middleCols(ws_start, wt) = v.middleCols(t1_start, wt);
    v.middleCols(t1_start, wt).setZero();
    clamp.leftCols(ws_start + wt).setOnes();  // statics + realized t
    clamp.rightCols(wt).setZero();
    crbm::gibbs(params, pre, v, &clamp, cfg.gibbs_steps, rngs, ws);
  }

  const int dropout_slot = dropout_slot_of(s);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool dropped = false;
    for (int t = 0; t <= horizon; ++t) {
      out.post_dropout(i, t) = dropped ? 1 : 0;
      if (out.values[static_cast<std::size_t>(t)](i, dropout_slot) == 1.0) dropped = true;
    }
  }
}

}  // namespace

TrajectoryEnsemble simulate_conditional(const pipeline::PatientSeries& baseline,
                                        const crbm::CrbmParams& params, const schema::Schema& s,
                                        const pipeline::Transforms& transforms,
                                        const SimulateConfig& cfg, int horizon) {
  const auto& layout = params.layout;
  TrajectoryEnsemble out;
  out.patient_id = baseline.patient_id;

  std::vector<double> stat_vals(static_cast<std::size_t>(layout.width_static));
  std::vector<std::uint8_t> stat_mask(static_cast<std::size_t>(layout.width_static));
  std::vector<double> slot_vals(static_cast<std::size_t>(layout.width_temporal));
  std::vector<std::uint8_t> slot_mask(static_cast<std::size_t>(layout.width_temporal));
  pipeline::encode_statics(baseline, s, layout, transforms, stat_vals.data(), stat_mask.data());
  pipeline::encode_temporal_slot(baseline, 0, s, layout, transforms, slot_vals.data(),
                                 slot_mask.data());

  MatRX v = MatRX::Zero(cfg.n_draws, layout.total_width);
  MatRXu8 clamp = MatRXu8::Zero(cfg.n_draws, layout.total_width);
  for (int j = 0; j < layout.width_static; ++j) {
    v.col(j).setConstant(stat_vals[static_cast<std::size_t>(j)]);
    clamp.col(j).setConstant(stat_mask[static_cast<std::size_t>(j)]);
  }
  const int t_start = layout.group_start(model::BlockGroup::time_t);
  for (int j = 0; j < layout.width_temporal; ++j) {
    v.col(t_start + j).setConstant(slot_vals[static_cast<std::size_t>(j)]);
    clamp.col(t_start + j).setConstant(slot_mask[static_cast<std::size_t>(j)]);
  }

  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(cfg.n_draws));
  for (int d = 0; d < cfg.n_draws; ++d)
    rngs.emplace_back(
        derive_seed(cfg.seed, "sim.conditional." + baseline.patient_id, static_cast<std::uint64_t>(d)));
  run_forward(params, s, transforms, v, std::move(clamp), horizon, cfg, rngs, out);
  return out;
}

namespace {

std::vector<TrajectoryEnsemble> generative_population(int n_patients,
                                                      const crbm::CrbmParams& params,
                                                      const schema::Schema& s,
                                                      const pipeline::Transforms& transforms,
                                                      const SimulateConfig& cfg,
                                                      const int* clamp_coord,
                                                      double clamp_value,
                                                      std::uint64_t batch_tag) {
  const auto& layout = params.layout;
  const crbm::Precomp pre = crbm::precompute(params);
  crbm::GibbsWorkspace ws;

  MatRX v = MatRX::Zero(n_patients, layout.total_width);
  MatRXu8 clamp = MatRXu8::Zero(n_patients, layout.total_width);
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(n_patients));
  for (int i = 0; i < n_patients; ++i)
    rngs.emplace_back(derive_seed(cfg.seed, "sim.generative", batch_tag,
                                  static_cast<std::uint64_t>(i)));
  if (clamp_coord) {
    v.col(*clamp_coord).setConstant(clamp_value);
    clamp.col(*clamp_coord).setOnes();
  }
  // Equilibrate the joint, then keep [static | t] as the synthetic
  // baseline; the trailing block is discarded.
  crbm::gibbs(params, pre, v, clamp_coord ? &clamp : nullptr, cfg.baseline_equilibration, rngs,
              ws);
  const int t1_start = layout.group_start(model::BlockGroup::time_t1);
  v.middleCols(t1_start, layout.width_temporal).setZero();
  clamp.setZero();
  clamp.leftCols(t1_start).setOnes();

  TrajectoryEnsemble batch;
  run_forward(params, s, transforms, v, std::move(clamp), 6, cfg, rngs, batch);

  std::vector<TrajectoryEnsemble> out;
  out.reserve(static_cast<std::size_t>(n_patients));
  for (int i = 0; i < n_patients; ++i) {
    TrajectoryEnsemble one;
    one.generative = true;
    one.values.assign(batch.values.size(), MatRX(1, batch.values[0].cols()));
    for (std::size_t t = 0; t < batch.values.size(); ++t) one.values[t].row(0) = batch.values[t].row(i);
    one.post_dropout = batch.post_dropout.row(i);
    one.statics.push_back(batch.statics[static_cast<std::size_t>(i)]);
    out.push_back(std::move(one));
  }
  return out;
}

}  // namespace

std::vector<TrajectoryEnsemble> simulate_generative(int n_patients,
                                                    const crbm::CrbmParams& params,
                                                    const schema::Schema& s,
                                                    const pipeline::Transforms& transforms,
                                                    const SimulateConfig& cfg) {
  auto out = generative_population(n_patients, params, s, transforms, cfg, nullptr, 0.0, 0);
  for (int i = 0; i < n_patients; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "V%06d", i);
    out[static_cast<std::size_t>(i)].patient_id = buf;
  }
  return out;
}

std::vector<TrajectoryEnsemble> simulate_progressor_population(
    int n_patients, bool diagnosis_ad, int adas_total_target, const crbm::CrbmParams& params,
    const schema::Schema& s, const pipeline::Transforms& transforms, const SimulateConfig& cfg,
    int max_attempt_batches) {
  // Locate the diagnosis coordinate in the static group.
  int diag_coord = -1;
  for (const auto& block : params.layout.blocks)
    if (block.group == model::BlockGroup::statics &&
        s.at(static_cast<std::size_t>(block.var_index)).name == "Initial diagnosis (AD or MCI)")
      diag_coord = block.offset;
  if (diag_coord < 0) fail("UnknownVariable", "Initial diagnosis (AD or MCI)");

  const auto slots = adas_component_slots(s);
  std::vector<TrajectoryEnsemble> accepted;
  for (int attempt = 0; attempt < max_attempt_batches; ++attempt) {
    auto batch = generative_population(n_patients, params, s, transforms, cfg, &diag_coord,
                                       diagnosis_ad ? 1.0 : 0.0,
                                       static_cast<std::uint64_t>(attempt) + 1);
    for (auto& e : batch) {
      int total = 0;
      for (int slot : slots) total += static_cast<int>(std::lround(e.values[0](0, slot)));
      if (total != adas_total_target) continue;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "Q%06zu", accepted.size());
      e.patient_id = buf;
      accepted.push_back(std::move(e));
      if (accepted.size() == static_cast<std::size_t>(n_patients)) return accepted;
    }
  }
  fail("GroupTooSmall",
       "progressor rejection sampling exhausted attempts; accepted " +
           std::to_string(accepted.size()) + " of " + std::to_string(n_patients));
}

std::vector<int> adas_component_slots(const schema::Schema& s) {
  std::vector<int> slots;
  const auto temporal = s.temporal_indices();
  for (std::size_t k = 0; k < temporal.size(); ++k) {
    const auto& spec = s.at(static_cast<std::size_t>(temporal[k]));
    if (spec.category == schema::Category::adas && spec.name != "ADAS Delayed Word Recall")
      slots.push_back(static_cast<int>(k));
  }
  if (slots.size() != 11) fail("DimensionMismatch", "expected 11 scored ADAS components");
  return slots;
}

int adas_total(const schema::Schema& s,
               const std::vector<std::optional<double>>& temporal_values) {
  int total = 0;
  for (int slot : adas_component_slots(s)) {
    const auto& v = temporal_values[static_cast<std::size_t>(slot)];
    if (!v.has_value()) fail("MissingComponent", "ADAS component missing at slot " + std::to_string(slot));
    total += static_cast<int>(std::lround(*v));
  }
  return total;
}

ScoreChangeDistribution predict_score_change(const TrajectoryEnsemble& ensemble,
                                             const pipeline::PatientSeries& baseline,
                                             const schema::Schema& s, int readout_t) {
  const Eigen::Index n_draws = ensemble.values[0].rows();
  if (n_draws < 2) fail("ConfigInvalid", "predict_score_change: n_draws >= 2 required");
  std::vector<std::optional<double>> base_vals;
  for (const auto& v : baseline.frames[0])
    base_vals.push_back(v.has_value() ? std::optional<double>(std::get<double>(*v))
                                      : std::nullopt);
  const int base_total = adas_total(s, base_vals);

  const auto slots = adas_component_slots(s);
  ScoreChangeDistribution out;
  out.patient_id = ensemble.patient_id;
  out.readout_t = readout_t;
  out.changes.reserve(static_cast<std::size_t>(n_draws));
  for (Eigen::Index d = 0; d < n_draws; ++d) {
    int total = 0;
    for (int slot : slots)
      total += static_cast<int>(std::lround(ensemble.values[static_cast<std::size_t>(readout_t)](d, slot)));
    out.changes.push_back(static_cast<double>(total - base_total));
  }
  double mean = 0.0;
  for (double c : out.changes) mean += c;
  mean /= static_cast<double>(out.changes.size());
  double ss = 0.0;
  for (double c : out.changes) ss += (c - mean) * (c - mean);
  out.mean = mean;
  out.stddev = std::sqrt(ss / static_cast<double>(out.changes.size() - 1));
  return out;
}

void write_trajectories_csv(const std::string& path,
                            const std::vector<TrajectoryEnsemble>& ensembles,
                            const schema::Schema& s) {
  CsvWriter out(path, {"patient_id", "draw", "month", "variable", "value", "post_dropout"});
  const auto temporal = s.temporal_indices();
  for (const auto& e : ensembles) {
    for (Eigen::Index d = 0; d < e.values[0].rows(); ++d) {
      for (std::size_t t = 0; t < e.values.size(); ++t) {
        for (std::size_t k = 0; k < temporal.size(); ++k) {
          out.row({e.patient_id, std::to_string(d), std::to_string(3 * t),
                   s.at(static_cast<std::size_t>(temporal[k])).name,
                   fmt_double(e.values[t](d, static_cast<int>(k))),
                   std::to_string(static_cast<int>(e.post_dropout(d, static_cast<int>(t))))});
        }
      }
    }
  }
}

namespace {
double nearest_rank(std::vector<double>& sorted_buf, double p) {
  std::sort(sorted_buf.begin(), sorted_buf.end());
  const std::size_t n = sorted_buf.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted_buf[rank - 1];
}
}  // namespace

void write_summary_csv(const std::string& path, const std::vector<TrajectoryEnsemble>& ensembles,
                       const schema::Schema& s) {
  CsvWriter out(path,
                {"patient_id", "month", "variable", "mean", "std", "q10", "q50", "q90"});
  const auto temporal = s.temporal_indices();
  for (const auto& e : ensembles) {
    const Eigen::Index n = e.values[0].rows();
    for (std::size_t t = 0; t < e.values.size(); ++t) {
      for (std::size_t k = 0; k < temporal.size(); ++k) {
        double mean = 0.0;
        std::vector<double> buf(static_cast<std::size_t>(n));
        for (Eigen::Index d = 0; d < n; ++d) {
          buf[static_cast<std::size_t>(d)] = e.values[t](d, static_cast<int>(k));
          mean += buf[static_cast<std::size_t>(d)];
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double x : buf) ss += (x - mean) * (x - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        std::vector<double> b1 = buf, b2 = buf, b3 = buf;
        out.row({e.patient_id, std::to_string(3 * t),
                 s.at(static_cast<std::size_t>(temporal[k])).name, fmt_double(mean),
                 fmt_double(sd), fmt_double(nearest_rank(b1, 0.10)),
                 fmt_double(nearest_rank(b2, 0.50)), fmt_double(nearest_rank(b3, 0.90))});
      }
    }
  }
}

void write_baselines_csv(const std::string& path, const std::vector<TrajectoryEnsemble>& ensembles,
                         const schema::Schema& s) {
  CsvWriter out(path, {"patient_id", "draw", "variable", "value"});
  const auto statics = s.static_indices();
  const auto temporal = s.temporal_indices();
  for (const auto& e : ensembles) {
    for (std::size_t d = 0; d < e.statics.size(); ++d) {
      for (std::size_t k = 0; k < statics.size(); ++k)
        out.row({e.patient_id, std::to_string(d), s.at(static_cast<std::size_t>(statics[k])).name,
                 schema::canonical_to_string(e.statics[d][k])});
      for (std::size_t k = 0; k < temporal.size(); ++k)
        out.row({e.patient_id, std::to_string(d), s.at(static_cast<std::size_t>(temporal[k])).name,
                 fmt_double(e.values[0](static_cast<Eigen::Index>(d), static_cast<int>(k)))});
    }
  }
}

void write_score_changes_csv(const std::string& path,
                             const std::vector<ScoreChangeDistribution>& changes) {
  CsvWriter out(path, {"patient_id", "readout_month", "mean_change", "std_change", "n_draws"});
  for (const auto& c : changes)
    out.row({c.patient_id, std::to_string(3 * c.readout_t), fmt_double(c.mean),
             fmt_double(c.stddev), std::to_string(c.changes.size())});
}

std::vector<TrajectoryEnsemble> read_trajectories_csv(const std::string& path,
                                                      const schema::Schema& s) {
  const CsvTable table = read_csv(path);
  const auto temporal = s.temporal_indices();
  std::map<std::string, int> slot_of;
  for (std::size_t k = 0; k < temporal.size(); ++k)
    slot_of[s.at(static_cast<std::size_t>(temporal[k])).name] = static_cast<int>(k);

  struct Cell {
    int draw, t, slot;
    double value;
    int post;
  };
  std::map<std::string, std::vector<Cell>> by_patient;
  std::vector<std::string> order;
  for (const auto& row : table.rows) {
    if (!by_patient.count(row[0])) order.push_back(row[0]);
    by_patient[row[0]].push_back({std::atoi(row[1].c_str()), std::atoi(row[2].c_str()) / 3,
                                  slot_of.at(row[3]), std::strtod(row[4].c_str(), nullptr),
                                  std::atoi(row[5].c_str())});
  }
  std::vector<TrajectoryEnsemble> out;
  for (const auto& id : order) {
    const auto& cells = by_patient[id];
    int n_draws = 0, horizon = 0;
    for (const auto& c : cells) {
      n_draws = std::max(n_draws, c.draw + 1);
      horizon = std::max(horizon, c.t);
    }
    TrajectoryEnsemble e;
    e.patient_id = id;
    e.values.assign(static_cast<std::size_t>(horizon) + 1,
                    MatRX::Zero(n_draws, static_cast<Eigen::Index>(temporal.size())));
    e.post_dropout.setZero(n_draws, pipeline::kTimePoints);
    for (const auto& c : cells) {
      e.values[static_cast<std::size_t>(c.t)](c.draw, c.slot) = c.value;
      e.post_dropout(c.draw, c.t) = static_cast<std::uint8_t>(c.post);
    }
    e.statics.assign(static_cast<std::size_t>(n_draws), {});
    out.push_back(std::move(e));
  }
  return out;
}

void read_baselines_into(const std::string& path, std::vector<TrajectoryEnsemble>& ensembles,
                         const schema::Schema& s) {
  const CsvTable table = read_csv(path);
  const auto statics = s.static_indices();
  std::map<std::string, int> sslot;
  for (std::size_t k = 0; k < statics.size(); ++k)
    sslot[s.at(static_cast<std::size_t>(statics[k])).name] = static_cast<int>(k);
  std::map<std::string, TrajectoryEnsemble*> by_id;
  for (auto& e : ensembles) {
    by_id[e.patient_id] = &e;
    for (auto& row : e.statics) row.assign(statics.size(), schema::CanonicalValue{0.0});
  }
  for (const auto& row : table.rows) {
    auto it = by_id.find(row[0]);
    if (it == by_id.end()) continue;
    auto slot = sslot.find(row[2]);
    if (slot == sslot.end()) continue;  // temporal baseline rows are already in values[0]
    const int draw = std::atoi(row[1].c_str());
    const auto& spec = s.at(static_cast<std::size_t>(statics[static_cast<std::size_t>(slot->second)]));
    schema::CanonicalValue v =
        spec.kind.tag == schema::VariableKind::Tag::categorical
            ? schema::CanonicalValue{row[3]}
            : schema::CanonicalValue{std::strtod(row[3].c_str(), nullptr)};
    if (draw < static_cast<int>(it->second->statics.size()))
      it->second->statics[static_cast<std::size_t>(draw)][static_cast<std::size_t>(slot->second)] = v;
  }
}

std::vector<ScoreChangeDistribution> read_score_changes_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  std::vector<ScoreChangeDistribution> out;
  for (const auto& row : table.rows) {
    ScoreChangeDistribution c;
    c.patient_id = row[0];
    c.readout_t = std::atoi(row[1].c_str()) / 3;
    c.mean = std::strtod(row[2].c_str(), nullptr);
    c.stddev = std::strtod(row[3].c_str(), nullptr);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace trajsim::sim
