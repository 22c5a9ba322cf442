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

#ifndef TRAJSIM_SYNTHGEN_HPP
#define TRAJSIM_SYNTHGEN_HPP

#include <map>
#include <string>
#include <vector>

#include "trajsim/pipeline.hpp"
#include "trajsim/schema.hpp"
#include "trajsim/types.hpp"

namespace trajsim::synth {

struct SynthConfig {
  int n_patients = 1000;
  std::uint64_t seed = 0;
  // Missing-completely-at-random rates. Cognitive exams go missing at the
  // instrument level (a skipped exam drops all components of that visit);
  // laboratory/clinical/background values go missing per variable.
  double missing_adas = 0.15;
  double missing_mmse = 0.15;
  double missing_lab = 0.15;
  double missing_clinical = 0.15;
  double missing_background = 0.05;
  double dropout_scale = 0.04;  // per-interval hazard scale
  double drift_slope = 0.12;    // latent progression per 3 months at s = 0
  double latent_noise = 0.25;   // per-step latent innovation sd
};

/// Per-variable observation model around the latent severity s:
/// ordinal level ~ clip(round(base + load*s + between*r + noise*N));
/// continuous value ~ exp(base + load*s + between*r + noise*N),
/// where r is a stable per-patient effect.
struct VarProcess {
  double base = 0.0;
  double load = 0.0;
  double noise = 0.0;
  double between = 0.0;
};

/// One-dimensional latent severity with nonlinear drift: progression
/// accelerates at high severity (faster progressors stay fast), and the
/// recall-type cognitive variables carry the largest loadings.
struct GroundTruthProcess {
  schema::Schema schema;
  SynthConfig cfg;
  std::map<int, VarProcess> var_models;  // by schema index

  static GroundTruthProcess standard(const SynthConfig& cfg);

  double drift(double s, double apoe) const;
  double dropout_hazard(double s) const;

  /// Exact E[x_v | s, effect] per-kind (ordinal sums level probabilities,
  /// continuous uses the lognormal mean).
  double conditional_mean(int var_index, double s, double effect) const;
};

struct PatientState {
  std::string patient_id;
  double s0 = 0.0;
  double apoe = 0.0;
  std::map<int, double> effects;  // per-variable stable effect draws
  std::vector<std::optional<schema::CanonicalValue>> statics;  // schema static order
};

struct CohortTruth {
  std::vector<int> var_indices;  // temporal schema indices, column order
  struct Row {
    std::string patient_id;
    int month = 0;
    double latent = 0.0;
    std::vector<double> true_means;
  };
  std::vector<Row> rows;
};

struct GeneratedCohort {
  std::vector<pipeline::RawEvent> events;
  CohortTruth truth;
  std::vector<PatientState> states;
};

GeneratedCohort generate_cohort(const GroundTruthProcess& process);

/// events.csv (pipeline RawEvent format) + ground_truth.csv sidecar.
void write_cohort(const std::string& dir, const GeneratedCohort& cohort,
                  const schema::Schema& s);

/// Monte Carlo estimate of E[x(readout) | baseline latent state], the
/// information-theoretic floor for any predictor that only sees baseline
/// observations. Column order matches CohortTruth::var_indices.
VectorXd oracle_conditional_mean(const GroundTruthProcess& process, const PatientState& state,
                                 int readout_t, int n_rollouts, std::uint64_t seed);

}  // namespace trajsim::synth

#endif  // TRAJSIM_SYNTHGEN_HPP
