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

#include "trajsim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "trajsim/simulate.hpp"
#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/parallel.hpp"
#include "trajsim/util/rng.hpp"

namespace trajsim::baselines {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<double> frame_value(const pipeline::PatientSeries& p, int t, int slot) {
  const auto& v = p.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(slot)];
  if (!v.has_value()) return std::nullopt;
  return std::get<double>(*v);
}
}  // namespace

FeatureMatrix baseline_features(const std::vector<const pipeline::PatientSeries*>& patients,
                                const schema::Schema& s,
                                const pipeline::Transforms& transforms) {
  FeatureMatrix fm;
  // Column plan.
  struct Col {
    int var = 0;
    int label = -1;  // categorical label index
  };
  std::vector<Col> cols;
  for (std::size_t var = 0; var < s.size(); ++var) {
    const auto& spec = s.at(var);
    if (spec.kind.tag == schema::VariableKind::Tag::categorical) {
      for (std::size_t l = 0; l < spec.kind.labels.size(); ++l) {
        cols.push_back({static_cast<int>(var), static_cast<int>(l)});
        fm.names.push_back(spec.name + "=" + spec.kind.labels[l]);
      }
    } else {
      cols.push_back({static_cast<int>(var), -1});
      fm.names.push_back(spec.name);
    }
  }
  const auto temporal = s.temporal_indices();
  const auto statics = s.static_indices();
  std::map<int, int> tslot, sslot;
  for (std::size_t k = 0; k < temporal.size(); ++k) tslot[temporal[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < statics.size(); ++k) sslot[statics[k]] = static_cast<int>(k);

  fm.x.resize(static_cast<Eigen::Index>(patients.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < patients.size(); ++i) {
    const auto& p = *patients[i];
    fm.patient_ids.push_back(p.patient_id);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& spec = s.at(static_cast<std::size_t>(cols[c].var));
      const std::optional<schema::CanonicalValue>& value =
          spec.temporal ? p.frames[0][static_cast<std::size_t>(tslot.at(cols[c].var))]
                        : p.statics[static_cast<std::size_t>(sslot.at(cols[c].var))];
      double out = kNaN;
      if (value.has_value()) {
        switch (spec.kind.tag) {
          case schema::VariableKind::Tag::continuous_positive: {
            const auto* t = transforms.get(cols[c].var);
            const schema::TransformState id{};
            const auto& tr = t ? *t : id;
            out = (std::log(std::get<double>(*value)) - tr.mean_log) / tr.std_log;
            break;
          }
          case schema::VariableKind::Tag::binary:
          case schema::VariableKind::Tag::ordinal:
            out = std::get<double>(*value);
            break;
          case schema::VariableKind::Tag::categorical: {
            const auto& labels = spec.kind.labels;
            const auto it =
                std::find(labels.begin(), labels.end(), std::get<std::string>(*value));
            out = (static_cast<int>(it - labels.begin()) == cols[c].label) ? 1.0 : 0.0;
            break;
          }
        }
      }
      fm.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = out;
    }
  }
  return fm;
}

ColumnStats fit_column_stats(const MatRX& x_raw, const std::vector<int>& rows) {
  const Eigen::Index d = x_raw.cols();
  ColumnStats st;
  st.impute_mean = VectorXd::Zero(d);
  st.mean = VectorXd::Zero(d);
  st.stddev = VectorXd::Ones(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    double sum = 0.0;
    double count = 0.0;
    for (int r : rows) {
      const double v = x_raw(r, c);
      if (std::isnan(v)) continue;
      sum += v;
      count += 1.0;
    }
    st.impute_mean(c) = count > 0 ? sum / count : 0.0;
    double m = 0.0, ss = 0.0;
    for (int r : rows) {
      double v = x_raw(r, c);
      if (std::isnan(v)) v = st.impute_mean(c);
      m += v;
    }
    m /= static_cast<double>(rows.size());
    for (int r : rows) {
      double v = x_raw(r, c);
      if (std::isnan(v)) v = st.impute_mean(c);
      ss += (v - m) * (v - m);
    }
    st.mean(c) = m;
    const double sd = std::sqrt(ss / static_cast<double>(rows.size()));
    st.stddev(c) = sd > 1e-12 ? sd : 1.0;
  }
  return st;
}

MatRX materialize(const MatRX& x_raw, const ColumnStats& stats, bool standardize) {
  MatRX x = x_raw;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (std::isnan(x(i, c))) x(i, c) = stats.impute_mean(c);
      if (standardize) x(i, c) = (x(i, c) - stats.mean(c)) / stats.stddev(c);
    }
  return x;
}

VectorXd ridge_solve(const MatRX& x, const VectorXd& y, double alpha) {
  const Eigen::Index d = x.cols();
  MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += alpha;
  Eigen::LDLT<MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) fail("SingularSystem", "ridge_solve");
  return solver.solve(x.transpose() * y);
}

std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  Rng rng(derive_seed(seed, "cv.folds"));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<int> fold(n);
  for (std::size_t i = 0; i < n; ++i)
    fold[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fold;
}

SupervisedTask prepare_supervised(const std::vector<const pipeline::PatientSeries*>& train,
                                  const std::vector<const pipeline::PatientSeries*>& test,
                                  const schema::Schema& s,
                                  const pipeline::Transforms& transforms, int readout_t) {
  const auto slots = sim::adas_component_slots(s);
  auto complete = [&](const pipeline::PatientSeries& p, int t) {
    for (int slot : slots)
      if (!frame_value(p, t, slot).has_value()) return false;
    return true;
  };
  auto total = [&](const pipeline::PatientSeries& p, int t) {
    int sum = 0;
    for (int slot : slots) sum += static_cast<int>(std::lround(*frame_value(p, t, slot)));
    return sum;
  };
  auto build = [&](const std::vector<const pipeline::PatientSeries*>& pool, FeatureMatrix& fm,
                   VectorXd& y) {
    std::vector<const pipeline::PatientSeries*> kept;
    std::vector<double> labels;
    for (const auto* p : pool) {
      if (!complete(*p, 0) || !complete(*p, readout_t)) continue;
      kept.push_back(p);
      labels.push_back(static_cast<double>(total(*p, readout_t) - total(*p, 0)));
    }
    fm = baseline_features(kept, s, transforms);
    y = Eigen::Map<const VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  };
  SupervisedTask task;
  build(train, task.features, task.y);
  build(test, task.test_features, task.y_test);
  return task;
}

namespace {

double rms_of(const VectorXd& pred, const VectorXd& truth) {
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(truth.size()));
}

std::vector<int> rows_of(const std::vector<int>& fold, int k, bool in_fold) {
  std::vector<int> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if ((fold[i] == k) == in_fold) out.push_back(static_cast<int>(i));
  return out;
}

MatRX subset_rows(const MatRX& x, const std::vector<int>& rows) {
  MatRX out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

VectorXd subset(const VectorXd& y, const std::vector<int>& rows) {
  VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  return out;
}

// Generic nested-CV driver: `fit_predict(train_rows, eval_rows, hyper)`
// returns eval predictions. Hyperparameter chosen per outer fold by inner
// RMS; the modal choice (ties -> first in grid) is refit on everything.
struct NestedResult {
  int chosen = 0;
  double cv_rms = 0.0;
};

template <typename FitPredict>
NestedResult nested_cv(const MatRX& x_raw, const VectorXd& y, const std::vector<double>& grid,
                       const CvPlan& plan, const FitPredict& fit_predict) {
  const std::size_t n = static_cast<std::size_t>(x_raw.rows());
  const auto outer = fold_assignment(n, plan.outer_folds, derive_seed(plan.seed, "cv.outer"));
  std::vector<int> votes(grid.size(), 0);
  double sq_sum = 0.0;
  std::size_t sq_count = 0;
  for (int of = 0; of < plan.outer_folds; ++of) {
    const auto train_rows = rows_of(outer, of, false);
    const auto eval_rows = rows_of(outer, of, true);
    if (train_rows.empty() || eval_rows.empty()) continue;
    // Inner selection on the outer-train portion.
    const auto inner = fold_assignment(train_rows.size(), plan.inner_folds,
                                       derive_seed(plan.seed, "cv.inner", static_cast<std::uint64_t>(of)));
    int best = 0;
    double best_rms = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double sq = 0.0;
      std::size_t count = 0;
      for (int inf = 0; inf < plan.inner_folds; ++inf) {
        std::vector<int> itrain, ieval;
        for (std::size_t i = 0; i < train_rows.size(); ++i)
          (inner[i] == inf ? ieval : itrain).push_back(train_rows[i]);
        if (itrain.empty() || ieval.empty()) continue;
        const VectorXd pred = fit_predict(itrain, ieval, grid[g]);
        const VectorXd truth = subset(y, ieval);
        sq += (pred - truth).squaredNorm();
        count += ieval.size();
      }
      const double rms = count ? std::sqrt(sq / static_cast<double>(count))
                               : std::numeric_limits<double>::infinity();
      if (rms < best_rms) {
        best_rms = rms;
        best = static_cast<int>(g);
      }
    }
    ++votes[static_cast<std::size_t>(best)];
    const VectorXd pred = fit_predict(train_rows, eval_rows, grid[static_cast<std::size_t>(best)]);
    sq_sum += (pred - subset(y, eval_rows)).squaredNorm();
    sq_count += eval_rows.size();
  }
  NestedResult r;
  r.chosen = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  r.cv_rms = sq_count ? std::sqrt(sq_sum / static_cast<double>(sq_count)) : 0.0;
  return r;
}

std::vector<int> all_rows(Eigen::Index n) {
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return rows;
}

}  // namespace

PredictionSet run_ridge(const SupervisedTask& task, const CvPlan& plan, int readout_t) {
  const MatRX& x_raw = task.features.x;
  const VectorXd& y = task.y;
  auto fit_predict = [&](const std::vector<int>& train_rows, const std::vector<int>& eval_rows,
                         double alpha) {
    const ColumnStats stats = fit_column_stats(x_raw, train_rows);
    const MatRX xt = materialize(subset_rows(x_raw, train_rows), stats, true);
    const VectorXd yt = subset(y, train_rows);
    const double y_mean = yt.mean();
    const VectorXd beta = ridge_solve(xt, (yt.array() - y_mean).matrix(), alpha);
    const MatRX xe = materialize(subset_rows(x_raw, eval_rows), stats, true);
    return (xe * beta).array() + y_mean;
  };
  std::vector<double> grid;
  for (int k = -3; k <= 2; ++k) grid.push_back(std::pow(10.0, k));
  const NestedResult nested = nested_cv(x_raw, y, grid, plan, fit_predict);
  PredictionSet out;
  out.model = "ridge";
  out.readout_t = readout_t;
  out.patient_ids = task.test_features.patient_ids;
  out.truth = task.y_test;
  out.cv_rms = nested.cv_rms;
  out.hyperparameter = "alpha=" + fmt_double(grid[static_cast<std::size_t>(nested.chosen)]);
  // Final refit on the full supervised training set.
  const auto rows = all_rows(x_raw.rows());
  const ColumnStats stats = fit_column_stats(x_raw, rows);
  const MatRX xt = materialize(x_raw, stats, true);
  const double y_mean = y.mean();
  const VectorXd beta =
      ridge_solve(xt, (y.array() - y_mean).matrix(), grid[static_cast<std::size_t>(nested.chosen)]);
  out.pred = (materialize(task.test_features.x, stats, true) * beta).array() + y_mean;
  return out;
}

PredictionSet run_rf(const SupervisedTask& task, const CvPlan& plan, int readout_t) {
  const MatRX& x_raw = task.features.x;
  const VectorXd& y = task.y;
  auto make_config = [&](double depth, std::uint64_t salt) {
    forest::ForestConfig fc;
    fc.n_trees = 100;
    fc.max_depth = static_cast<int>(depth);
    fc.min_leaf = 5;
    fc.feature_fraction = 1.0 / 3.0;
    fc.classification = false;
    fc.seed = derive_seed(plan.seed, "baselines.rf", salt);
    return fc;
  };
  auto fit_predict = [&](const std::vector<int>& train_rows, const std::vector<int>& eval_rows,
                         double depth) {
    const ColumnStats stats = fit_column_stats(x_raw, train_rows);
    const MatRX xt = materialize(subset_rows(x_raw, train_rows), stats, false);
    MatRX yt(static_cast<Eigen::Index>(train_rows.size()), 1);
    yt.col(0) = subset(y, train_rows);
    forest::Forest rf;
    rf.fit(xt, yt, make_config(depth, static_cast<std::uint64_t>(train_rows.size())));
    const MatRX xe = materialize(subset_rows(x_raw, eval_rows), stats, false);
    return rf.predict_scalar_batch(xe);
  };
  const std::vector<double> grid = {4, 8, 16, 32, 64};
  const NestedResult nested = nested_cv(x_raw, y, grid, plan, fit_predict);
  PredictionSet out;
  out.model = "rf";
  out.readout_t = readout_t;
  out.patient_ids = task.test_features.patient_ids;
  out.truth = task.y_test;
  out.cv_rms = nested.cv_rms;
  out.hyperparameter = "max_depth=" + fmt_double(grid[static_cast<std::size_t>(nested.chosen)]);
  const auto rows = all_rows(x_raw.rows());
  const ColumnStats stats = fit_column_stats(x_raw, rows);
  const MatRX xt = materialize(x_raw, stats, false);
  MatRX yt(x_raw.rows(), 1);
  yt.col(0) = y;
  forest::Forest rf;
  rf.fit(xt, yt, make_config(grid[static_cast<std::size_t>(nested.chosen)], 0));
  out.pred = rf.predict_scalar_batch(materialize(task.test_features.x, stats, false));
  return out;
}

VectorXd MlpModel::predict(const MatRX& x) const {
  MatRX a1 = ((x * w1).rowwise() + b1.transpose()).cwiseMax(0.0);
  MatRX a2 = ((a1 * w2).rowwise() + b2.transpose()).cwiseMax(0.0);
  return ((a2 * w3).array() + b3 + y_mean).matrix();
}

MlpModel fit_mlp(const MatRX& x, const VectorXd& y_raw, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  constexpr int kH1 = 30, kH2 = 10, kEpochs = 20, kBatch = 25;
  constexpr double kLr = 0.02, kBeta1 = 0.9, kBeta2 = 0.999;

  MlpModel model;
  model.y_mean = y_raw.mean();
  const VectorXd y = y_raw.array() - model.y_mean;

  Rng rng(derive_seed(seed, "mlp.init"));
  auto uniform_init = [&](Eigen::Index rows, Eigen::Index cols, double fan_in) {
    MatrixXd w(rows, cols);
    const double bound = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
    return w;
  };
  model.w1 = uniform_init(d, kH1, static_cast<double>(d));
  model.b1 = VectorXd::Zero(kH1);
  model.w2 = uniform_init(kH1, kH2, kH1);
  model.b2 = VectorXd::Zero(kH2);
  model.w3 = uniform_init(kH2, 1, kH2).col(0);
  model.b3 = 0.0;

  const Eigen::Index n_params = d * kH1 + kH1 + kH1 * kH2 + kH2 + kH2 + 1;
  VectorXd m = VectorXd::Zero(n_params), v = VectorXd::Zero(n_params);
  long step = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng shuffle_rng(derive_seed(seed, "mlp.shuffle"));

  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    for (Eigen::Index lo = 0; lo < n; lo += kBatch) {
      const Eigen::Index bs = std::min<Eigen::Index>(kBatch, n - lo);
      MatRX xb(bs, d);
      VectorXd yb(bs);
      for (Eigen::Index i = 0; i < bs; ++i) {
        xb.row(i) = x.row(order[static_cast<std::size_t>(lo + i)]);
        yb(i) = y(order[static_cast<std::size_t>(lo + i)]);
      }
      // Forward.
      MatRX z1 = (xb * model.w1).rowwise() + model.b1.transpose();
      MatRX a1 = z1.cwiseMax(0.0);
      MatRX z2 = (a1 * model.w2).rowwise() + model.b2.transpose();
      MatRX a2 = z2.cwiseMax(0.0);
      VectorXd pred = (a2 * model.w3).array() + model.b3;
      // Backward (squared error, mean over batch).
      VectorXd dpred = 2.0 * (pred - yb) / static_cast<double>(bs);
      VectorXd g_w3 = a2.transpose() * dpred;
      double g_b3 = dpred.sum();
      MatRX da2 = dpred * model.w3.transpose();
      MatRX dz2 = (z2.array() > 0.0).select(da2, 0.0);
      MatrixXd g_w2 = a1.transpose() * dz2;
      VectorXd g_b2 = dz2.colwise().sum();
      MatRX da1 = dz2 * model.w2.transpose();
      MatRX dz1 = (z1.array() > 0.0).select(da1, 0.0);
      MatrixXd g_w1 = xb.transpose() * dz1;
      VectorXd g_b1 = dz1.colwise().sum();

      // Flatten, ADAM, unflatten.
      VectorXd grad(n_params);
      Eigen::Index at = 0;
      grad.segment(at, g_w1.size()) = Eigen::Map<VectorXd>(g_w1.data(), g_w1.size());
      at += g_w1.size();
      grad.segment(at, kH1) = g_b1;
      at += kH1;
      grad.segment(at, g_w2.size()) = Eigen::Map<VectorXd>(g_w2.data(), g_w2.size());
      at += g_w2.size();
      grad.segment(at, kH2) = g_b2;
      at += kH2;
      grad.segment(at, kH2) = g_w3;
      at += kH2;
      grad(at) = g_b3;

      ++step;
      m = kBeta1 * m + (1.0 - kBeta1) * grad;
      v = kBeta2 * v + (1.0 - kBeta2) * grad.array().square().matrix();
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      VectorXd delta = (kLr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + 1e-8)).matrix();

      at = 0;
      Eigen::Map<VectorXd>(model.w1.data(), model.w1.size()) -= delta.segment(at, model.w1.size());
      at += model.w1.size();
      model.b1 -= delta.segment(at, kH1);
      at += kH1;
      Eigen::Map<VectorXd>(model.w2.data(), model.w2.size()) -= delta.segment(at, model.w2.size());
      at += model.w2.size();
      model.b2 -= delta.segment(at, kH2);
      at += kH2;
      model.w3 -= delta.segment(at, kH2);
      at += kH2;
      model.b3 -= delta(at);
    }
  }
  return model;
}

PredictionSet run_mlp(const SupervisedTask& task, const CvPlan& plan, int readout_t) {
  const MatRX& x_raw = task.features.x;
  const VectorXd& y = task.y;
  // Single hyperparameter set, so only the outer loop runs (CV estimate).
  const std::size_t n = static_cast<std::size_t>(x_raw.rows());
  const auto outer = fold_assignment(n, plan.outer_folds, derive_seed(plan.seed, "cv.outer"));
  double sq = 0.0;
  std::size_t count = 0;
  for (int of = 0; of < plan.outer_folds; ++of) {
    const auto train_rows = rows_of(outer, of, false);
    const auto eval_rows = rows_of(outer, of, true);
    if (train_rows.empty() || eval_rows.empty()) continue;
    const ColumnStats stats = fit_column_stats(x_raw, train_rows);
    const MlpModel mlp = fit_mlp(materialize(subset_rows(x_raw, train_rows), stats, true),
                                 subset(y, train_rows),
                                 derive_seed(plan.seed, "mlp.fold", static_cast<std::uint64_t>(of)));
    const VectorXd pred = mlp.predict(materialize(subset_rows(x_raw, eval_rows), stats, true));
    sq += (pred - subset(y, eval_rows)).squaredNorm();
    count += eval_rows.size();
  }
  PredictionSet out;
  out.model = "mlp";
  out.readout_t = readout_t;
  out.patient_ids = task.test_features.patient_ids;
  out.truth = task.y_test;
  out.cv_rms = count ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
  out.hyperparameter = "fixed";
  const auto rows = all_rows(x_raw.rows());
  const ColumnStats stats = fit_column_stats(x_raw, rows);
  const MlpModel mlp =
      fit_mlp(materialize(x_raw, stats, true), y, derive_seed(plan.seed, "mlp.final"));
  out.pred = mlp.predict(materialize(task.test_features.x, stats, true));
  return out;
}

std::vector<PredictionSet> run_forecasters(
    const std::vector<const pipeline::PatientSeries*>& train,
    const std::vector<const pipeline::PatientSeries*>& test, const schema::Schema& s,
    const pipeline::Transforms& transforms, std::uint64_t seed, bool include_global) {
  const FeatureMatrix train_fm = baseline_features(train, s, transforms);
  const FeatureMatrix test_fm = baseline_features(test, s, transforms);
  const auto targets = s.forecastable_indices();
  const auto temporal = s.temporal_indices();
  std::map<int, int> tslot;
  for (std::size_t k = 0; k < temporal.size(); ++k) tslot[temporal[k]] = static_cast<int>(k);

  struct Task {
    int var;
    int readout;
  };
  std::vector<Task> tasks;
  for (int var : targets)
    for (int r = 1; r <= 6; ++r) tasks.push_back({var, r});

  std::vector<PredictionSet> per_var(tasks.size());
  parallel_blocks(tasks.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ti = lo; ti < hi; ++ti) {
      const auto [var, readout] = tasks[ti];
      const int slot = tslot.at(var);
      std::vector<int> train_rows, test_rows;
      std::vector<double> y_train, y_test;
      for (std::size_t i = 0; i < train.size(); ++i) {
        const auto base = frame_value(*train[i], 0, slot);
        const auto label = frame_value(*train[i], readout, slot);
        if (!base.has_value() || !label.has_value()) continue;
        train_rows.push_back(static_cast<int>(i));
        y_train.push_back(*label);
      }
      PredictionSet set;
      set.model = "rf_pervar";
      set.var_index = var;
      set.readout_t = readout;
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto base = frame_value(*test[i], 0, slot);
        const auto label = frame_value(*test[i], readout, slot);
        if (!base.has_value() || !label.has_value()) continue;
        test_rows.push_back(static_cast<int>(i));
        set.patient_ids.push_back(test[i]->patient_id);
        y_test.push_back(*label);
      }
      set.truth = Eigen::Map<const VectorXd>(y_test.data(), static_cast<Eigen::Index>(y_test.size()));
      if (train_rows.empty() || test_rows.empty()) {
        set.pred.resize(0);
        per_var[ti] = std::move(set);
        continue;
      }
      const ColumnStats stats = fit_column_stats(train_fm.x, train_rows);
      const MatRX xt = materialize(subset_rows(train_fm.x, train_rows), stats, false);
      MatRX yt(static_cast<Eigen::Index>(y_train.size()), 1);
      yt.col(0) = Eigen::Map<const VectorXd>(y_train.data(), static_cast<Eigen::Index>(y_train.size()));
      forest::ForestConfig fc;
      fc.n_trees = 100;
      fc.max_depth = 8;
      fc.min_leaf = 5;
      fc.feature_fraction = 1.0 / 3.0;
      fc.seed = derive_seed(seed, "forecaster", static_cast<std::uint64_t>(var),
                            static_cast<std::uint64_t>(readout));
      forest::Forest rf;
      rf.fit(xt, yt, fc);
      set.pred = rf.predict_scalar_batch(materialize(subset_rows(test_fm.x, test_rows), stats, false));
      set.hyperparameter = "max_depth=8";
      per_var[ti] = std::move(set);
    }
  });

  std::vector<PredictionSet> out(per_var.begin(), per_var.end());
  if (!include_global) return out;

  // Global forecaster: one multivariate RF per readout over standardized
  // outputs; missing label dimensions take the training mean.
  for (int readout = 1; readout <= 6; ++readout) {
    const auto rows = all_rows(train_fm.x.rows());
    const ColumnStats stats = fit_column_stats(train_fm.x, rows);
    const MatRX xt = materialize(train_fm.x, stats, false);
    MatRX yt(train_fm.x.rows(), static_cast<Eigen::Index>(targets.size()));
    VectorXd y_mean(static_cast<Eigen::Index>(targets.size()));
    VectorXd y_std(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const int slot = tslot.at(targets[k]);
      double sum = 0.0, count = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) {
        const auto label = frame_value(*train[i], readout, slot);
        if (!label) continue;
        sum += *label;
        count += 1.0;
      }
      const double mean = count > 0 ? sum / count : 0.0;
      double ss = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) {
        const auto label = frame_value(*train[i], readout, slot);
        if (!label) continue;
        ss += (*label - mean) * (*label - mean);
      }
      const double sd = count > 1 ? std::sqrt(ss / count) : 1.0;
      y_mean(static_cast<Eigen::Index>(k)) = mean;
      y_std(static_cast<Eigen::Index>(k)) = sd > 1e-12 ? sd : 1.0;
      for (std::size_t i = 0; i < train.size(); ++i) {
        const auto label = frame_value(*train[i], readout, slot);
        yt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            label ? (*label - mean) / y_std(static_cast<Eigen::Index>(k)) : 0.0;
      }
    }
    forest::ForestConfig fc;
    fc.n_trees = 100;
    fc.max_depth = 8;
    fc.min_leaf = 5;
    fc.feature_fraction = 1.0 / 3.0;
    fc.seed = derive_seed(seed, "forecaster.global", static_cast<std::uint64_t>(readout));
    forest::Forest rf;
    rf.fit(xt, yt, fc);

    const MatRX xe = materialize(test_fm.x, stats, false);
    MatRX preds(test_fm.x.rows(), static_cast<Eigen::Index>(targets.size()));
    for (Eigen::Index i = 0; i < xe.rows(); ++i) {
      const VectorXd p = rf.predict(xe.row(i).data());
      for (std::size_t k = 0; k < targets.size(); ++k)
        preds(i, static_cast<Eigen::Index>(k)) =
            p(static_cast<Eigen::Index>(k)) * y_std(static_cast<Eigen::Index>(k)) +
            y_mean(static_cast<Eigen::Index>(k));
    }
    // Emit on the identical per-cell test sets.
    std::map<std::string, Eigen::Index> test_row_of;
    for (std::size_t i = 0; i < test_fm.patient_ids.size(); ++i)
      test_row_of[test_fm.patient_ids[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const PredictionSet* ref = nullptr;
      for (const auto& setv : out)
        if (setv.model == "rf_pervar" && setv.var_index == targets[k] && setv.readout_t == readout)
          ref = &setv;
      if (!ref) continue;
      PredictionSet g;
      g.model = "rf_global";
      g.var_index = targets[k];
      g.readout_t = readout;
      g.patient_ids = ref->patient_ids;
      g.truth = ref->truth;
      g.pred.resize(static_cast<Eigen::Index>(ref->patient_ids.size()));
      for (std::size_t i = 0; i < ref->patient_ids.size(); ++i)
        g.pred(static_cast<Eigen::Index>(i)) =
            preds(test_row_of.at(ref->patient_ids[i]), static_cast<Eigen::Index>(k));
      g.hyperparameter = "max_depth=8";
      out.push_back(std::move(g));
    }
  }
  return out;
}

void write_predictions_csv(const std::string& path, const std::vector<PredictionSet>& sets,
                           const schema::Schema& s) {
  CsvWriter out(path, {"model", "variable", "readout_month", "patient_id", "pred", "truth"});
  for (const auto& set : sets) {
    const std::string var =
        set.var_index < 0 ? "adas_change" : s.at(static_cast<std::size_t>(set.var_index)).name;
    for (std::size_t i = 0; i < set.patient_ids.size(); ++i)
      out.row({set.model, var, std::to_string(3 * set.readout_t), set.patient_ids[i],
               fmt_double(set.pred(static_cast<Eigen::Index>(i))),
               fmt_double(set.truth(static_cast<Eigen::Index>(i)))});
  }
}

std::vector<PredictionSet> read_predictions_csv(const std::string& path,
                                                const schema::Schema& s) {
  const CsvTable table = read_csv(path);
  std::map<std::string, PredictionSet> by_key;
  std::map<std::string, std::vector<double>> preds, truths;
  std::vector<std::string> key_order;
  for (const auto& row : table.rows) {
    const std::string key = row[0] + "|" + row[1] + "|" + row[2];
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      PredictionSet set;
      set.model = row[0];
      set.var_index = row[1] == "adas_change" ? -1 : s.find(row[1]);
      set.readout_t = std::atoi(row[2].c_str()) / 3;
      by_key[key] = std::move(set);
      key_order.push_back(key);
    }
    by_key[key].patient_ids.push_back(row[3]);
    preds[key].push_back(std::strtod(row[4].c_str(), nullptr));
    truths[key].push_back(std::strtod(row[5].c_str(), nullptr));
  }
  std::vector<PredictionSet> out;
  for (const auto& key : key_order) {
    PredictionSet set = std::move(by_key[key]);
    set.pred = Eigen::Map<const VectorXd>(preds[key].data(),
                                          static_cast<Eigen::Index>(preds[key].size()));
    set.truth = Eigen::Map<const VectorXd>(truths[key].data(),
                                           static_cast<Eigen::Index>(truths[key].size()));
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace trajsim::baselines
