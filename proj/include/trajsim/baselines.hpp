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

#ifndef TRAJSIM_BASELINES_HPP
#define TRAJSIM_BASELINES_HPP

#include <optional>
#include <string>
#include <vector>

#include "trajsim/forest.hpp"
#include "trajsim/pipeline.hpp"

namespace trajsim::baselines {

/// Baseline feature matrix in canonical supervised encoding: continuous as
/// standardized logs, ordinal as raw levels, binary 0/1, categorical
/// one-hot. Missing entries are NaN until imputation.
struct FeatureMatrix {
  MatRX x;  // rows = patients, NaN = missing
  std::vector<std::string> names;
  std::vector<std::string> patient_ids;
};

FeatureMatrix baseline_features(const std::vector<const pipeline::PatientSeries*>& patients,
                                const schema::Schema& s, const pipeline::Transforms& transforms);

/// Column statistics fitted on a row subset (NaN-aware). Imputation and
/// standardization always come from training rows so folds stay clean.
struct ColumnStats {
  VectorXd impute_mean;  // observed mean per column
  VectorXd mean, stddev;  // post-imputation moments
};
ColumnStats fit_column_stats(const MatRX& x_raw, const std::vector<int>& rows);
MatRX materialize(const MatRX& x_raw, const ColumnStats& stats, bool standardize);

/// Raw penalized least squares (X^T X + alpha I)^-1 X^T y, no intercept:
/// callers standardize features and center labels first.
VectorXd ridge_solve(const MatRX& x, const VectorXd& y, double alpha);

/// Patient-level k-fold assignment, deterministic under seed.
std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed);

struct CvPlan {
  int outer_folds = 5;
  int inner_folds = 5;
  std::uint64_t seed = 0;
};

/// Predictions of one model on one task's test set.
struct PredictionSet {
  std::string model;   // ridge | rf | mlp | rf_pervar | rf_global | crbm
  int var_index = -1;  // schema index; -1 = ADAS-change task
  int readout_t = 0;
  std::vector<std::string> patient_ids;
  VectorXd pred;
  VectorXd truth;
  double cv_rms = 0.0;  // nested-CV estimate where applicable
  std::string hyperparameter;
};

/// The supervised task for one readout: patients with complete ADAS at
/// baseline and readout; label = ADAS-Cog total change.
struct SupervisedTask {
  FeatureMatrix features;  // training rows (train+validation splits)
  VectorXd y;
  FeatureMatrix test_features;
  VectorXd y_test;
};
SupervisedTask prepare_supervised(const std::vector<const pipeline::PatientSeries*>& train,
                                  const std::vector<const pipeline::PatientSeries*>& test,
                                  const schema::Schema& s,
                                  const pipeline::Transforms& transforms, int readout_t);

/// Ridge with alpha in {10^k, k=-3..2} by nested CV.
PredictionSet run_ridge(const SupervisedTask& task, const CvPlan& plan, int readout_t);
/// 100-tree random forest, max depth in {4,8,16,32,64} by nested CV.
PredictionSet run_rf(const SupervisedTask& task, const CvPlan& plan, int readout_t);
/// 30-10 ReLU network, single hyperparameter set (outer CV only).
PredictionSet run_mlp(const SupervisedTask& task, const CvPlan& plan, int readout_t);

struct MlpModel {
  MatrixXd w1, w2;
  VectorXd b1, b2, w3;
  double b3 = 0.0;
  double y_mean = 0.0;
  VectorXd predict(const MatRX& x_standardized) const;
};
/// Squared-error training: ADAM lr 0.02, batch 25, 20 epochs.
MlpModel fit_mlp(const MatRX& x_standardized, const VectorXd& y, std::uint64_t seed);

/// One RF per (forecastable variable, readout) — 35 x 6 = 210 models —
/// trained on baseline features, plus (optionally) one multivariate RF per
/// readout predicting all 35 variables at once. Per-cell test sets are
/// identical across models.
std::vector<PredictionSet> run_forecasters(
    const std::vector<const pipeline::PatientSeries*>& train,
    const std::vector<const pipeline::PatientSeries*>& test, const schema::Schema& s,
    const pipeline::Transforms& transforms, std::uint64_t seed, bool include_global);

void write_predictions_csv(const std::string& path, const std::vector<PredictionSet>& sets,
                           const schema::Schema& s);
std::vector<PredictionSet> read_predictions_csv(const std::string& path,
                                                const schema::Schema& s);

}  // namespace trajsim::baselines

#endif  // TRAJSIM_BASELINES_HPP
