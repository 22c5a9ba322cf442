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

#ifndef TRAJSIM_SIMULATE_HPP
#define TRAJSIM_SIMULATE_HPP

#include <optional>
#include <string>
#include <vector>

#include "trajsim/crbm.hpp"
#include "trajsim/pipeline.hpp"

namespace trajsim::sim {

struct SimulateConfig {
  int n_draws = 100;
  int gibbs_steps = 50;              // per transition
  int baseline_equilibration = 500;  // generative baseline burn-in
  std::uint64_t seed = 0;
};

/// Repeated simulated trajectories for one patient, decoded to canonical
/// units. Conditional draws reproduce the clamped baseline exactly where
/// observed; missing baseline entries are imputed per draw.
struct TrajectoryEnsemble {
  std::string patient_id;
  bool generative = false;
  // values[time] is n_draws x n_temporal (canonical numeric values).
  std::vector<MatRX> values;
  // post_dropout(draw, time): a sampled dropout flag was 1 at an earlier
  // time point; evaluation can censor on it.
  MatRXu8 post_dropout;
  // statics[draw][static slot], canonical (imputed statics vary by draw).
  std::vector<std::vector<schema::CanonicalValue>> statics;
};

/// Clamps the observed [x_t | x_static] baseline blocks and iteratively
/// samples the next time point, shifting forward `horizon` times.
TrajectoryEnsemble simulate_conditional(const pipeline::PatientSeries& baseline,
                                        const crbm::CrbmParams& params,
                                        const schema::Schema& s,
                                        const pipeline::Transforms& transforms,
                                        const SimulateConfig& cfg, int horizon = 6);

/// Entirely synthetic patients: the baseline [static | t] blocks come from
/// a long unclamped Gibbs run, then trajectories extend as in the
/// conditional mode. One draw per virtual patient.
std::vector<TrajectoryEnsemble> simulate_generative(int n_patients,
                                                    const crbm::CrbmParams& params,
                                                    const schema::Schema& s,
                                                    const pipeline::Transforms& transforms,
                                                    const SimulateConfig& cfg);

/// Generative population conditioned on a fixed diagnosis (clamped) and an
/// exact baseline 11-component ADAS total (rejection sampled).
std::vector<TrajectoryEnsemble> simulate_progressor_population(
    int n_patients, bool diagnosis_ad, int adas_total_target, const crbm::CrbmParams& params,
    const schema::Schema& s, const pipeline::Transforms& transforms, const SimulateConfig& cfg,
    int max_attempt_batches = 200);

/// Sum of the 11 scored ADAS-Cog components (delayed word recall
/// excluded). Values indexed by temporal slot; missing -> MissingComponent.
int adas_total(const schema::Schema& s,
               const std::vector<std::optional<double>>& temporal_values);

/// Slots of the 11 scored components within the temporal variable order.
std::vector<int> adas_component_slots(const schema::Schema& s);

struct ScoreChangeDistribution {
  std::string patient_id;
  int readout_t = 6;
  std::vector<double> changes;  // per draw
  double mean = 0.0;
  double stddev = 0.0;  // n-1 sample deviation
};

/// Per-draw change = adas_total(readout) - adas_total(observed baseline);
/// requires a fully observed baseline ADAS and n_draws >= 2.
ScoreChangeDistribution predict_score_change(const TrajectoryEnsemble& ensemble,
                                             const pipeline::PatientSeries& baseline,
                                             const schema::Schema& s, int readout_t);

// --- file interfaces ---

void write_trajectories_csv(const std::string& path,
                            const std::vector<TrajectoryEnsemble>& ensembles,
                            const schema::Schema& s);
void write_summary_csv(const std::string& path, const std::vector<TrajectoryEnsemble>& ensembles,
                       const schema::Schema& s);
void write_baselines_csv(const std::string& path, const std::vector<TrajectoryEnsemble>& ensembles,
                         const schema::Schema& s);
void write_score_changes_csv(const std::string& path,
                             const std::vector<ScoreChangeDistribution>& changes);

std::vector<TrajectoryEnsemble> read_trajectories_csv(const std::string& path,
                                                      const schema::Schema& s);
/// Fills ensemble statics from a baselines.csv written next to the
/// trajectories (first draw per patient).
void read_baselines_into(const std::string& path, std::vector<TrajectoryEnsemble>& ensembles,
                         const schema::Schema& s);
std::vector<ScoreChangeDistribution> read_score_changes_csv(const std::string& path);

}  // namespace trajsim::sim

#endif  // TRAJSIM_SIMULATE_HPP
