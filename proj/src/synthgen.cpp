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

#include "trajsim/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/rng.hpp"
#include "trajsim/util/truncnorm.hpp"

namespace fs = std::filesystem;

namespace trajsim::synth {

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

struct NamedProcess {
  const char* name;
  VarProcess p;
};

// Ordinal: base/load/noise on the level scale. Continuous: on the log
// scale (base = log median). Recall-type variables carry the largest
// severity loadings; MMSE loads are negative (higher severity scores
// lower); laboratory loadings are weak on purpose.
const NamedProcess kTemporalModels[] = {
    {"ADAS Commands", {0.9, 0.55, 0.75, 0.30}},
    {"ADAS Comprehension", {0.9, 0.55, 0.75, 0.30}},
    {"ADAS Construction", {1.0, 0.50, 0.80, 0.30}},
    {"ADAS Delayed Word Recall", {4.5, 1.80, 1.00, 0.50}},
    {"ADAS Ideational", {0.8, 0.50, 0.75, 0.30}},
    {"ADAS Instructions", {0.8, 0.55, 0.75, 0.30}},
    {"ADAS Naming", {0.7, 0.50, 0.70, 0.30}},
    {"ADAS Orientation", {1.5, 0.80, 0.90, 0.35}},
    {"ADAS Spoken Language", {0.7, 0.50, 0.70, 0.30}},
    {"ADAS Word Finding", {0.9, 0.55, 0.75, 0.30}},
    {"ADAS Word Recall", {3.8, 1.80, 1.00, 0.50}},
    {"ADAS Word Recognition", {4.0, 1.90, 1.10, 0.50}},
    {"MMSE Attention and Calculation", {3.4, -0.70, 0.80, 0.30}},
    {"MMSE Language", {7.6, -0.80, 0.90, 0.35}},
    {"MMSE Orientation", {8.4, -1.00, 0.90, 0.35}},
    {"MMSE Recall", {1.8, -0.90, 0.70, 0.25}},
    {"MMSE Registration", {2.6, -0.40, 0.50, 0.20}},
    {"Alanine aminotransferase", {-0.92, 0.05, 0.25, 0.25}},
    {"Alkaline phosphatase", {0.18, 0.04, 0.20, 0.22}},
    {"Aspartate aminotransferase", {-0.80, 0.05, 0.22, 0.22}},
    {"Cholesterol", {1.65, -0.03, 0.12, 0.15}},
    {"Creatine kinase", {0.18, 0.03, 0.30, 0.30}},
    {"Creatinine", {-0.11, 0.04, 0.12, 0.18}},
    {"Gamma glutamyl transferase", {1.10, 0.06, 0.25, 0.35}},
    {"Hematocrit", {-0.87, -0.02, 0.05, 0.07}},
    {"Hemoglobin", {2.62, -0.03, 0.05, 0.07}},
    {"Hemoglobin a1c", {1.76, 0.02, 0.04, 0.08}},
    {"Indirect bilirubin", {-0.69, 0.02, 0.22, 0.25}},
    {"Potassium", {1.46, 0.01, 0.05, 0.04}},
    {"Sodium", {2.64, -0.01, 0.02, 0.02}},
    {"Triglycerides", {0.34, 0.03, 0.22, 0.28}},
    {"Blood pressure (diastolic)", {4.36, 0.02, 0.07, 0.08}},
    {"Blood pressure (systolic)", {4.88, 0.03, 0.07, 0.09}},
    {"Heart rate", {4.25, 0.02, 0.09, 0.09}},
    {"Weight", {4.28, -0.04, 0.03, 0.18}},
};

const NamedProcess kStaticModels[] = {
    {"Age at baseline", {4.28, 0.04, 0.08, 0.0}},  // log years; older skews severe
    {"Height", {5.12, 0.0, 0.045, 0.0}},           // log cm
};

}  // namespace

GroundTruthProcess GroundTruthProcess::standard(const SynthConfig& cfg) {
  GroundTruthProcess process;
  process.schema = schema::Schema::builtin();
  process.cfg = cfg;
  for (const auto& named : kTemporalModels) {
    const int idx = process.schema.find(named.name);
    if (idx < 0) fail("UnknownVariable", named.name);
    process.var_models[idx] = named.p;
  }
  for (const auto& named : kStaticModels) {
    const int idx = process.schema.find(named.name);
    if (idx < 0) fail("UnknownVariable", named.name);
    process.var_models[idx] = named.p;
  }
  return process;
}

double GroundTruthProcess::drift(double s, double apoe) const {
  return cfg.drift_slope * (1.0 + std::tanh(s)) * (1.0 + 0.1 * apoe);
}

double GroundTruthProcess::dropout_hazard(double s) const {
  return cfg.dropout_scale * sigmoid(0.8 * s);
}

double GroundTruthProcess::conditional_mean(int var_index, double s, double effect) const {
  const auto& spec = schema.at(static_cast<std::size_t>(var_index));
  if (spec.name == "Dropout") return dropout_hazard(s);
  const auto it = var_models.find(var_index);
  if (it == var_models.end()) fail("UnknownVariable", spec.name + ": no process model");
  const VarProcess& vp = it->second;
  const double center = vp.base + vp.load * s + vp.between * effect;
  switch (spec.kind.tag) {
    case schema::VariableKind::Tag::continuous_positive:
      return std::exp(center + 0.5 * vp.noise * vp.noise);
    case schema::VariableKind::Tag::ordinal: {
      // E[clip(round(center + noise*N))] via exact level probabilities.
      double mean = 0.0;
      for (int level = spec.kind.ord_min; level <= spec.kind.ord_max; ++level) {
        const double lo = level == spec.kind.ord_min
                              ? 0.0
                              : norm_cdf((level - 0.5 - center) / vp.noise);
        const double hi = level == spec.kind.ord_max
                              ? 1.0
                              : norm_cdf((level + 0.5 - center) / vp.noise);
        mean += level * (hi - lo);
      }
      return mean;
    }
    default:
      fail("UnknownVariable", spec.name + ": unsupported kind in ground truth");
  }
}

namespace {

double sample_value(const schema::VariableSpec& spec, const VarProcess& vp, double s,
                    double effect, Rng& rng) {
  const double center = vp.base + vp.load * s + vp.between * effect;
  if (spec.kind.tag == schema::VariableKind::Tag::continuous_positive)
    return std::exp(center + vp.noise * rng.normal());
  double level = std::round(center + vp.noise * rng.normal());
  return std::clamp(level, static_cast<double>(spec.kind.ord_min),
                    static_cast<double>(spec.kind.ord_max));
}

std::string format_value(double v) { return fmt_double(v); }

}  // namespace

GeneratedCohort generate_cohort(const GroundTruthProcess& process) {
  const auto& s = process.schema;
  const auto& cfg = process.cfg;
  GeneratedCohort out;
  out.truth.var_indices = s.temporal_indices();

  const int region_idx = s.find("Geographic region");
  const int race_idx = s.find("Race");
  const int sex_idx = s.find("Sex");
  const int diag_idx = s.find("Initial diagnosis (AD or MCI)");
  const int cardio_idx = s.find("Past cardiovascular event");
  const int apoe_idx = s.find("ApoE e4 allele count");
  const int age_idx = s.find("Age at baseline");
  const int height_idx = s.find("Height");
  const int dropout_idx = s.dropout_index();
  const auto statics = s.static_indices();

  const double region_probs[] = {0.45, 0.05, 0.25, 0.10, 0.03, 0.10, 0.02};
  const double race_probs[] = {0.80, 0.07, 0.06, 0.02, 0.01, 0.04};
  const double apoe_probs[] = {0.55, 0.35, 0.10};

  auto pick = [](const double* probs, int n, Rng& rng) {
    const double r = rng.uniform();
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
      cum += probs[i];
      if (r < cum) return i;
    }
    return n - 1;
  };

  for (int pi = 0; pi < cfg.n_patients; ++pi) {
    Rng rng(derive_seed(cfg.seed, "synth.patient", static_cast<std::uint64_t>(pi)));
    PatientState state;
    {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "P%06d", pi);
      state.patient_id = buf;
    }
    state.s0 = rng.normal();
    for (const auto& [var, vp] : process.var_models) state.effects[var] = rng.normal();

    // Statics in canonical form.
    state.statics.resize(statics.size());
    auto static_slot = [&](int var) {
      return static_cast<std::size_t>(
          std::find(statics.begin(), statics.end(), var) - statics.begin());
    };
    state.apoe = pick(apoe_probs, 3, rng);
    const double age = std::exp(process.var_models.at(age_idx).base +
                                process.var_models.at(age_idx).load * state.s0 +
                                process.var_models.at(age_idx).noise * rng.normal());
    const double height = std::exp(process.var_models.at(height_idx).base +
                                   process.var_models.at(height_idx).noise * rng.normal());
    state.statics[static_slot(age_idx)] = schema::CanonicalValue{std::round(age)};
    state.statics[static_slot(height_idx)] = schema::CanonicalValue{std::round(height * 10.0) / 10.0};
    state.statics[static_slot(sex_idx)] = schema::CanonicalValue{rng.bernoulli(0.55) ? 1.0 : 0.0};
    state.statics[static_slot(diag_idx)] =
        schema::CanonicalValue{rng.bernoulli(sigmoid(1.2 * state.s0 + 0.2)) ? 1.0 : 0.0};
    state.statics[static_slot(cardio_idx)] = schema::CanonicalValue{rng.bernoulli(0.3) ? 1.0 : 0.0};
    state.statics[static_slot(apoe_idx)] = schema::CanonicalValue{state.apoe};
    state.statics[static_slot(region_idx)] = schema::CanonicalValue{
        s.at(static_cast<std::size_t>(region_idx)).kind.labels[static_cast<std::size_t>(
            pick(region_probs, 7, rng))]};
    state.statics[static_slot(race_idx)] = schema::CanonicalValue{
        s.at(static_cast<std::size_t>(race_idx)).kind.labels[static_cast<std::size_t>(
            pick(race_probs, 6, rng))]};

    // Static events at day 0 (age uses the `>89` convention when censored).
    for (std::size_t k = 0; k < statics.size(); ++k) {
      if (rng.uniform() < cfg.missing_background) continue;
      const auto& spec = s.at(static_cast<std::size_t>(statics[k]));
      const auto& value = state.statics[k];
      std::string text;
      if (statics[k] == age_idx && std::get<double>(*value) > 89.0)
        text = ">89";
      else if (statics[k] == sex_idx)
        text = std::get<double>(*value) == 1.0 ? "female" : "male";
      else if (statics[k] == diag_idx)
        text = std::get<double>(*value) == 1.0 ? "AD" : "MCI";
      else
        text = schema::canonical_to_string(*value);
      out.events.push_back({state.patient_id, spec.name, 0, text});
    }

    // Latent path and temporal observations.
    double latent = state.s0;
    bool dropped = false;
    for (int t = 0; t < pipeline::kTimePoints; ++t) {
      out.truth.rows.push_back({state.patient_id, 3 * t, latent, {}});
      auto& truth_row = out.truth.rows.back();
      truth_row.true_means.reserve(out.truth.var_indices.size());
      for (int var : out.truth.var_indices)
        truth_row.true_means.push_back(
            var == dropout_idx ? process.dropout_hazard(latent)
                               : process.conditional_mean(var, latent, state.effects.at(var)));

      if (!dropped) {
        const long visit_day =
            90L * t + static_cast<long>(rng.below(41)) - 20;  // jitter in [-20, 20]
        const bool skip_adas = rng.uniform() < cfg.missing_adas;
        const bool skip_mmse = rng.uniform() < cfg.missing_mmse;
        for (int var : out.truth.var_indices) {
          if (var == dropout_idx) continue;
          const auto& spec = s.at(static_cast<std::size_t>(var));
          if (spec.category == schema::Category::adas && skip_adas) continue;
          if (spec.category == schema::Category::mmse && skip_mmse) continue;
          const double rate = spec.category == schema::Category::laboratory ? cfg.missing_lab
                              : spec.category == schema::Category::clinical ? cfg.missing_clinical
                                                                            : 0.0;
          if ((spec.category == schema::Category::laboratory ||
               spec.category == schema::Category::clinical) &&
              rng.uniform() < rate)
            continue;
          const VarProcess& vp = process.var_models.at(var);
          const double value = sample_value(spec, vp, latent, state.effects.at(var), rng);
          out.events.push_back({state.patient_id, spec.name, visit_day, format_value(value)});
          // Occasional repeat lab draw in the same window exercises
          // bucket averaging.
          if (spec.category == schema::Category::laboratory && rng.uniform() < 0.05) {
            const double again = sample_value(spec, vp, latent, state.effects.at(var), rng);
            out.events.push_back(
                {state.patient_id, spec.name, visit_day + 7, format_value(again)});
          }
        }
        // Dropout during (t, t+1]?
        if (t + 1 < pipeline::kTimePoints && rng.bernoulli(process.dropout_hazard(latent))) {
          dropped = true;
          out.events.push_back({state.patient_id, "Dropout", 90L * t + 30, "1"});
        }
      }
      latent += process.drift(latent, state.apoe) + cfg.latent_noise * rng.normal();
    }
    out.states.push_back(std::move(state));
  }
  return out;
}

void write_cohort(const std::string& dir, const GeneratedCohort& cohort,
                  const schema::Schema& s) {
  fs::create_directories(dir);
  pipeline::write_events_csv((fs::path(dir) / "events.csv").string(), cohort.events);
  std::vector<std::string> header = {"patient_id", "month", "latent"};
  for (int var : cohort.truth.var_indices)
    header.push_back("true_mean_" + pipeline::sanitize_name(s.at(static_cast<std::size_t>(var)).name));
  CsvWriter out((fs::path(dir) / "ground_truth.csv").string(), header);
  for (const auto& row : cohort.truth.rows) {
    std::vector<std::string> fields = {row.patient_id, std::to_string(row.month),
                                       fmt_double(row.latent)};
    for (double m : row.true_means) fields.push_back(fmt_double(m));
    out.row(fields);
  }
}

VectorXd oracle_conditional_mean(const GroundTruthProcess& process, const PatientState& state,
                                 int readout_t, int n_rollouts, std::uint64_t seed) {
  const auto temporal = process.schema.temporal_indices();
  const int dropout_idx = process.schema.dropout_index();
  VectorXd mean = VectorXd::Zero(static_cast<Eigen::Index>(temporal.size()));
  for (int r = 0; r < n_rollouts; ++r) {
    Rng rng(derive_seed(seed, "synth.oracle", static_cast<std::uint64_t>(r)));
    double latent = state.s0;
    for (int t = 0; t < readout_t; ++t)
      latent += process.drift(latent, state.apoe) + process.cfg.latent_noise * rng.normal();
    for (std::size_t k = 0; k < temporal.size(); ++k) {
      const int var = temporal[k];
      mean(static_cast<Eigen::Index>(k)) +=
          var == dropout_idx ? process.dropout_hazard(latent)
                             : process.conditional_mean(var, latent, state.effects.at(var));
    }
  }
  return mean / static_cast<double>(n_rollouts);
}

}  // namespace trajsim::synth
