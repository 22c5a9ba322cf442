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

#ifndef TRAJSIM_EVALUATE_HPP
#define TRAJSIM_EVALUATE_HPP

#include <optional>
#include <string>
#include <vector>

#include "trajsim/baselines.hpp"
#include "trajsim/pipeline.hpp"
#include "trajsim/simulate.hpp"

namespace trajsim::eval {

/// Canonical cohort tensor for metric computation: values[t](row, slot)
/// over temporal variables with presence bits. Rows are patients for real
/// cohorts and (patient, draw) pairs for simulated ones.
struct CohortView {
  std::vector<std::string> ids;
  std::vector<MatRX> values;     // kTimePoints entries
  std::vector<MatRXu8> present;  // same shape
};

CohortView view_of_series(const std::vector<const pipeline::PatientSeries*>& series,
                          const schema::Schema& s);
CohortView view_of_ensembles(const std::vector<sim::TrajectoryEnsemble>& ensembles,
                             const schema::Schema& s, bool censor_post_dropout);

// --- marginals ---

struct MarginalRow {
  int slot = 0;
  int t = 0;
  bool continuous = false;
  double distance = 0.0;  // KS for continuous, total variation for discrete
  bool valid = false;     // both sides had observations
};
std::vector<MarginalRow> marginal_report(const CohortView& real, const CohortView& synth,
                                         const schema::Schema& s);

// --- correlations ---

struct CorrEntry {
  int slot_a = 0, slot_b = 0;
  int t = -1;       // -1 = pooled over time
  int lag = 0;      // 0 equal-time, 1, 2
  double corr_real = 0.0, corr_model = 0.0;
  double weight = 0.0;  // fraction of possible pairs complete on the data side
  bool valid = false;
};

struct CorrelationReport {
  std::vector<CorrEntry> equal_time;  // per time point, pairs a < b
  std::vector<CorrEntry> pooled;      // pooled over time, pairs a < b
  std::vector<CorrEntry> lag1;        // same-variable autocorrelation, 3 months
  std::vector<CorrEntry> lag2;        // same-variable autocorrelation, 6 months
  double r2_equal_time = 0.0;         // weighted scatter fits (model vs data)
  double r2_lag1 = 0.0;
  double r2_lag2 = 0.0;
};

CorrelationReport correlation_report(const CohortView& real, const CohortView& synth,
                                     const schema::Schema& s);

/// Pearson on pairwise-complete observations; invalid below 3 pairs or on
/// degenerate variance.
struct PairCorr {
  double corr = 0.0;
  double weight = 0.0;
  bool valid = false;
};
PairCorr pairwise_pearson(const VectorXd& a, const VectorXd& b, const VectorXu8& pa,
                          const VectorXu8& pb);

/// Weighted least-squares R^2 of y against x.
double weighted_scatter_r2(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& w);

// --- error ratios ---

struct ErrorRatioRow {
  std::string model;
  int var_index = -1;
  int readout_t = 0;
  double rms = 0.0;
  double rms_stderr = 0.0;
  double truth_std = 0.0;  // population std of the test labels
  double ratio = 0.0;
  int n_test = 0;
};
/// RMS(pred - truth) / population std(truth); stderr by the delta method
/// over squared errors. EmptyTestSet when no rows.
ErrorRatioRow error_ratio(const baselines::PredictionSet& set);

// --- progressors ---

struct EffectSizeRow {
  std::string variable;
  double abs_d = 0.0;  // |mean_fast - mean_slow| / pooled std
  double mean_fast = 0.0, mean_slow = 0.0;
  int group_size = 0;
};
/// Splits single-draw trajectories into top/bottom `top_fraction` by
/// 18-month ADAS change and reports absolute Cohen's d per numeric
/// baseline variable. GroupTooSmall below 2 per group.
std::vector<EffectSizeRow> progressor_analysis(const std::vector<sim::TrajectoryEnsemble>& cohort,
                                               const schema::Schema& s,
                                               double top_fraction = 0.05);

// --- calibration ---

struct ZCalibration {
  std::vector<double> z;
  double mean_z = 0.0;
  double std_z = 0.0;
  double corr_absz_std = 0.0;  // |z| vs predicted std
  int n_skipped_zero_std = 0;
};
ZCalibration z_calibration(const std::vector<sim::ScoreChangeDistribution>& predictions,
                           const std::vector<std::pair<std::string, double>>& truths);

// --- population series ---

struct BoxplotRow {
  int t = 0;
  double mean = 0.0;
  double p10 = 0.0, p90 = 0.0;  // nearest-rank percentiles
  int n = 0;
};
/// Per-time mean and 10th/90th percentiles of the ADAS-Cog total over rows
/// with all 11 components present.
std::vector<BoxplotRow> population_boxplot_series(const CohortView& view,
                                                  const schema::Schema& s);

// --- file emitters (one CSV per figure-equivalent) ---

void write_marginals_csv(const std::string& path, const std::vector<MarginalRow>& rows,
                         const schema::Schema& s);
void write_correlations_csv(const std::string& path, const CorrelationReport& report,
                            const schema::Schema& s);
void write_correlation_r2_csv(const std::string& path, const CorrelationReport& report);
void write_error_ratios_csv(const std::string& path, const std::vector<ErrorRatioRow>& rows,
                            const schema::Schema& s);
void write_effect_sizes_csv(const std::string& path, const std::vector<EffectSizeRow>& rows);
void write_boxplot_csv(const std::string& path, const std::vector<BoxplotRow>& data_rows,
                       const std::vector<BoxplotRow>& model_rows);
void write_zscores_csv(const std::string& path, const std::string& summary_path,
                       const std::vector<sim::ScoreChangeDistribution>& predictions,
                       const std::vector<std::pair<std::string, double>>& truths,
                       const ZCalibration& calib);

}  // namespace trajsim::eval

#endif  // TRAJSIM_EVALUATE_HPP
