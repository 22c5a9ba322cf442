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

#include "trajsim/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"

namespace trajsim::eval {

CohortView view_of_series(const std::vector<const pipeline::PatientSeries*>& series,
                          const schema::Schema& s) {
  const auto temporal = s.temporal_indices();
  CohortView view;
  const Eigen::Index n = static_cast<Eigen::Index>(series.size());
  view.values.assign(pipeline::kTimePoints, MatRX::Zero(n, static_cast<Eigen::Index>(temporal.size())));
  view.present.assign(pipeline::kTimePoints,
                      MatRXu8::Zero(n, static_cast<Eigen::Index>(temporal.size())));
  for (Eigen::Index i = 0; i < n; ++i) {
    view.ids.push_back(series[static_cast<std::size_t>(i)]->patient_id);
    for (int t = 0; t < pipeline::kTimePoints; ++t) {
      const auto& frame = series[static_cast<std::size_t>(i)]->frames[static_cast<std::size_t>(t)];
      for (std::size_t k = 0; k < temporal.size(); ++k) {
        if (!frame[k].has_value()) continue;
        view.values[static_cast<std::size_t>(t)](i, static_cast<Eigen::Index>(k)) =
            std::get<double>(*frame[k]);
        view.present[static_cast<std::size_t>(t)](i, static_cast<Eigen::Index>(k)) = 1;
      }
    }
  }
  return view;
}

CohortView view_of_ensembles(const std::vector<sim::TrajectoryEnsemble>& ensembles,
                             const schema::Schema& s, bool censor_post_dropout) {
  const auto temporal = s.temporal_indices();
  CohortView view;
  Eigen::Index n = 0;
  for (const auto& e : ensembles) n += e.values[0].rows();
  view.values.assign(pipeline::kTimePoints, MatRX::Zero(n, static_cast<Eigen::Index>(temporal.size())));
  view.present.assign(pipeline::kTimePoints,
                      MatRXu8::Zero(n, static_cast<Eigen::Index>(temporal.size())));
  Eigen::Index row = 0;
  for (const auto& e : ensembles) {
    const int horizon = static_cast<int>(e.values.size()) - 1;
    for (Eigen::Index d = 0; d < e.values[0].rows(); ++d, ++row) {
      view.ids.push_back(e.patient_id);
      for (int t = 0; t < pipeline::kTimePoints; ++t) {
        if (t > horizon) continue;
        const bool censored = censor_post_dropout && e.post_dropout(d, t);
        if (censored) continue;
        view.values[static_cast<std::size_t>(t)].row(row) =
            e.values[static_cast<std::size_t>(t)].row(d);
        view.present[static_cast<std::size_t>(t)].row(row).setOnes();
      }
    }
  }
  return view;
}

namespace {

std::vector<double> observed_of(const MatRX& values, const MatRXu8& present, int slot) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    if (present(i, slot)) out.push_back(values(i, slot));
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return d;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  std::map<double, std::pair<double, double>> counts;
  for (double v : a) counts[v].first += 1.0;
  for (double v : b) counts[v].second += 1.0;
  double tv = 0.0;
  for (const auto& [value, c] : counts)
    tv += std::fabs(c.first / static_cast<double>(a.size()) -
                    c.second / static_cast<double>(b.size()));
  return 0.5 * tv;
}

}  // namespace

std::vector<MarginalRow> marginal_report(const CohortView& real, const CohortView& synth,
                                         const schema::Schema& s) {
  const auto temporal = s.temporal_indices();
  std::vector<MarginalRow> rows;
  for (std::size_t k = 0; k < temporal.size(); ++k) {
    const auto& spec = s.at(static_cast<std::size_t>(temporal[k]));
    const bool continuous = spec.kind.tag == schema::VariableKind::Tag::continuous_positive;
    for (int t = 0; t < pipeline::kTimePoints; ++t) {
      MarginalRow row;
      row.slot = static_cast<int>(k);
      row.t = t;
      row.continuous = continuous;
      auto a = observed_of(real.values[static_cast<std::size_t>(t)],
                           real.present[static_cast<std::size_t>(t)], static_cast<int>(k));
      auto b = observed_of(synth.values[static_cast<std::size_t>(t)],
                           synth.present[static_cast<std::size_t>(t)], static_cast<int>(k));
      if (!a.empty() && !b.empty()) {
        row.valid = true;
        row.distance = continuous ? ks_distance(std::move(a), std::move(b)) : tv_distance(a, b);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

PairCorr pairwise_pearson(const VectorXd& a, const VectorXd& b, const VectorXu8& pa,
                          const VectorXu8& pb) {
  PairCorr out;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  double n = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!pa(i) || !pb(i)) continue;
    n += 1.0;
    sa += a(i);
    sb += b(i);
    saa += a(i) * a(i);
    sbb += b(i) * b(i);
    sab += a(i) * b(i);
  }
  out.weight = a.size() > 0 ? n / static_cast<double>(a.size()) : 0.0;
  if (n < 3.0) return out;
  const double cov = sab / n - (sa / n) * (sb / n);
  const double va = saa / n - (sa / n) * (sa / n);
  const double vb = sbb / n - (sb / n) * (sb / n);
  if (va <= 1e-12 || vb <= 1e-12) {
    out.weight = 0.0;
    return out;  // degenerate variable: excluded, weight 0
  }
  out.corr = std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
  out.valid = true;
  return out;
}

double weighted_scatter_r2(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  if (sw <= 0.0) return 0.0;
  const double mx = sx / sw, my = sy / sw;
  const double vxx = sxx / sw - mx * mx;
  const double vxy = sxy / sw - mx * my;
  const double slope = vxx > 1e-15 ? vxy / vxx : 0.0;
  const double intercept = my - slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fit = intercept + slope * x[i];
    ss_res += w[i] * (y[i] - fit) * (y[i] - fit);
    ss_tot += w[i] * (y[i] - my) * (y[i] - my);
  }
  if (ss_tot <= 0.0) return ss_res <= 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

namespace {

// Stacks all time points into one pooled sample (rows = patient x time).
void stack_pooled(const CohortView& v, MatRX& values, MatRXu8& present) {
  const Eigen::Index n = v.values[0].rows();
  const Eigen::Index k = v.values[0].cols();
  values.resize(n * pipeline::kTimePoints, k);
  present.resize(n * pipeline::kTimePoints, k);
  for (int t = 0; t < pipeline::kTimePoints; ++t) {
    values.middleRows(static_cast<Eigen::Index>(t) * n, n) = v.values[static_cast<std::size_t>(t)];
    present.middleRows(static_cast<Eigen::Index>(t) * n, n) = v.present[static_cast<std::size_t>(t)];
  }
}

}  // namespace

CorrelationReport correlation_report(const CohortView& real, const CohortView& synth,
                                     const schema::Schema& s) {
  const auto temporal = s.temporal_indices();
  const int n_slots = static_cast<int>(temporal.size());
  CorrelationReport report;

  auto corr_pair = [&](const MatRX& va, const MatRXu8& pa, int a, const MatRX& vb,
                       const MatRXu8& pb, int b) {
    return pairwise_pearson(va.col(a), vb.col(b), pa.col(a), pb.col(b));
  };

  std::vector<double> sx, sy, sw;
  auto add_entry = [&](std::vector<CorrEntry>& bucket, const PairCorr& cr, const PairCorr& cm,
                       int a, int b, int t, int lag) {
    CorrEntry e;
    e.slot_a = a;
    e.slot_b = b;
    e.t = t;
    e.lag = lag;
    e.valid = cr.valid && cm.valid;
    e.weight = e.valid ? cr.weight : 0.0;
    e.corr_real = cr.corr;
    e.corr_model = cm.corr;
    bucket.push_back(e);
    if (e.valid && e.weight > 0.0) {
      sx.push_back(e.corr_real);
      sy.push_back(e.corr_model);
      sw.push_back(e.weight);
    }
  };

  // Equal-time correlations per time point.
  for (int t = 0; t < pipeline::kTimePoints; ++t) {
    const auto& rv = real.values[static_cast<std::size_t>(t)];
    const auto& rp = real.present[static_cast<std::size_t>(t)];
    const auto& mv = synth.values[static_cast<std::size_t>(t)];
    const auto& mp = synth.present[static_cast<std::size_t>(t)];
    for (int a = 0; a < n_slots; ++a)
      for (int b = a + 1; b < n_slots; ++b)
        add_entry(report.equal_time, corr_pair(rv, rp, a, rv, rp, b),
                  corr_pair(mv, mp, a, mv, mp, b), a, b, t, 0);
  }
  report.r2_equal_time = weighted_scatter_r2(sx, sy, sw);
  sx.clear();
  sy.clear();
  sw.clear();

  // Pooled over time.
  MatRX rv_pool, mv_pool;
  MatRXu8 rp_pool, mp_pool;
  stack_pooled(real, rv_pool, rp_pool);
  stack_pooled(synth, mv_pool, mp_pool);
  for (int a = 0; a < n_slots; ++a)
    for (int b = a + 1; b < n_slots; ++b)
      add_entry(report.pooled, corr_pair(rv_pool, rp_pool, a, rv_pool, rp_pool, b),
                corr_pair(mv_pool, mp_pool, a, mv_pool, mp_pool, b), a, b, -1, 0);
  sx.clear();
  sy.clear();
  sw.clear();

  // Same-variable autocorrelations at lags 1 and 2 (3 and 6 months).
  for (int lag = 1; lag <= 2; ++lag) {
    auto& bucket = lag == 1 ? report.lag1 : report.lag2;
    for (int t = 0; t + lag < pipeline::kTimePoints; ++t) {
      const auto& rv0 = real.values[static_cast<std::size_t>(t)];
      const auto& rp0 = real.present[static_cast<std::size_t>(t)];
      const auto& rv1 = real.values[static_cast<std::size_t>(t + lag)];
      const auto& rp1 = real.present[static_cast<std::size_t>(t + lag)];
      const auto& mv0 = synth.values[static_cast<std::size_t>(t)];
      const auto& mp0 = synth.present[static_cast<std::size_t>(t)];
      const auto& mv1 = synth.values[static_cast<std::size_t>(t + lag)];
      const auto& mp1 = synth.present[static_cast<std::size_t>(t + lag)];
      for (int a = 0; a < n_slots; ++a)
        add_entry(bucket, corr_pair(rv0, rp0, a, rv1, rp1, a), corr_pair(mv0, mp0, a, mv1, mp1, a),
                  a, a, t, lag);
    }
    const double r2 = weighted_scatter_r2(sx, sy, sw);
    (lag == 1 ? report.r2_lag1 : report.r2_lag2) = r2;
    sx.clear();
    sy.clear();
    sw.clear();
  }
  return report;
}

ErrorRatioRow error_ratio(const baselines::PredictionSet& set) {
  const Eigen::Index n = set.truth.size();
  if (n == 0 || set.pred.size() != n) fail("EmptyTestSet", "error_ratio: " + set.model);
  ErrorRatioRow row;
  row.model = set.model;
  row.var_index = set.var_index;
  row.readout_t = set.readout_t;
  row.n_test = static_cast<int>(n);
  const VectorXd sq = (set.pred - set.truth).array().square();
  const double mean_sq = sq.mean();
  row.rms = std::sqrt(mean_sq);
  const double var_sq = (sq.array() - mean_sq).square().sum() / static_cast<double>(n);
  row.rms_stderr =
      row.rms > 0.0 ? std::sqrt(var_sq / static_cast<double>(n)) / (2.0 * row.rms) : 0.0;
  const double mean_truth = set.truth.mean();
  row.truth_std = std::sqrt((set.truth.array() - mean_truth).square().sum() /
                            static_cast<double>(n));
  row.ratio = row.truth_std > 0.0 ? row.rms / row.truth_std
                                  : (row.rms == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return row;
}

std::vector<EffectSizeRow> progressor_analysis(const std::vector<sim::TrajectoryEnsemble>& cohort,
                                               const schema::Schema& s, double top_fraction) {
  const auto slots = sim::adas_component_slots(s);
  struct Entry {
    double change;
    std::size_t index;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& e = cohort[i];
    auto total_at = [&](int t) {
      int total = 0;
      for (int slot : slots)
        total += static_cast<int>(std::lround(e.values[static_cast<std::size_t>(t)](0, slot)));
      return total;
    };
    entries.push_back({static_cast<double>(total_at(6) - total_at(0)), i});
  }
  const std::size_t group =
      static_cast<std::size_t>(std::floor(top_fraction * static_cast<double>(entries.size())));
  if (group < 2) fail("GroupTooSmall", "progressor_analysis: < 2 per group");
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.change > b.change || (a.change == b.change && a.index < b.index);
  });
  std::vector<std::size_t> fast, slow;
  for (std::size_t i = 0; i < group; ++i) fast.push_back(entries[i].index);
  for (std::size_t i = 0; i < group; ++i) slow.push_back(entries[entries.size() - 1 - i].index);

  // Baseline value accessors per variable (numeric kinds only).
  const auto temporal = s.temporal_indices();
  const auto statics = s.static_indices();
  std::map<int, int> tslot, sslot;
  for (std::size_t k = 0; k < temporal.size(); ++k) tslot[temporal[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < statics.size(); ++k) sslot[statics[k]] = static_cast<int>(k);

  std::vector<EffectSizeRow> rows;
  for (std::size_t var = 0; var < s.size(); ++var) {
    const auto& spec = s.at(var);
    if (spec.kind.tag == schema::VariableKind::Tag::categorical) continue;
    auto value_of = [&](std::size_t i) {
      const auto& e = cohort[i];
      if (spec.temporal) return e.values[0](0, tslot.at(static_cast<int>(var)));
      return std::get<double>(e.statics[0][static_cast<std::size_t>(sslot.at(static_cast<int>(var)))]);
    };
    auto stats_of = [&](const std::vector<std::size_t>& group_idx) {
      double mean = 0.0;
      for (auto i : group_idx) mean += value_of(i);
      mean /= static_cast<double>(group_idx.size());
      double ss = 0.0;
      for (auto i : group_idx) ss += (value_of(i) - mean) * (value_of(i) - mean);
      return std::pair<double, double>{mean, ss / static_cast<double>(group_idx.size())};
    };
    const auto [mean_fast, var_fast] = stats_of(fast);
    const auto [mean_slow, var_slow] = stats_of(slow);
    const double pooled = std::sqrt(
        (static_cast<double>(fast.size()) * var_fast + static_cast<double>(slow.size()) * var_slow) /
        static_cast<double>(fast.size() + slow.size()));
    EffectSizeRow row;
    row.variable = spec.name;
    row.mean_fast = mean_fast;
    row.mean_slow = mean_slow;
    row.group_size = static_cast<int>(group);
    const double diff = std::fabs(mean_fast - mean_slow);
    row.abs_d = pooled > 1e-12 ? diff / pooled : (diff < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity());
    rows.push_back(row);
  }
  return rows;
}

ZCalibration z_calibration(const std::vector<sim::ScoreChangeDistribution>& predictions,
                           const std::vector<std::pair<std::string, double>>& truths) {
  std::map<std::string, double> truth_of(truths.begin(), truths.end());
  ZCalibration out;
  std::vector<double> stds;
  for (const auto& p : predictions) {
    auto it = truth_of.find(p.patient_id);
    if (it == truth_of.end()) continue;
    if (p.stddev <= 0.0) {
      ++out.n_skipped_zero_std;  // ZeroStd: skipped, counted
      continue;
    }
    out.z.push_back((p.mean - it->second) / p.stddev);
    stds.push_back(p.stddev);
  }
  const std::size_t n = out.z.size();
  if (n == 0) return out;
  double mean = 0.0;
  for (double z : out.z) mean += z;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double z : out.z) ss += (z - mean) * (z - mean);
  out.mean_z = mean;
  out.std_z = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  // Confidence independence: correlation of |z| with the predicted std.
  VectorXd absz(static_cast<Eigen::Index>(n)), sd(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    absz(static_cast<Eigen::Index>(i)) = std::fabs(out.z[i]);
    sd(static_cast<Eigen::Index>(i)) = stds[i];
  }
  VectorXu8 ones = VectorXu8::Ones(static_cast<Eigen::Index>(n));
  const PairCorr c = pairwise_pearson(absz, sd, ones, ones);
  out.corr_absz_std = c.valid ? c.corr : 0.0;
  return out;
}

std::vector<BoxplotRow> population_boxplot_series(const CohortView& view,
                                                  const schema::Schema& s) {
  const auto slots = sim::adas_component_slots(s);
  std::vector<BoxplotRow> rows;
  for (int t = 0; t < pipeline::kTimePoints; ++t) {
    std::vector<double> totals;
    const auto& values = view.values[static_cast<std::size_t>(t)];
    const auto& present = view.present[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      bool complete = true;
      int total = 0;
      for (int slot : slots) {
        if (!present(i, slot)) {
          complete = false;
          break;
        }
        total += static_cast<int>(std::lround(values(i, slot)));
      }
      if (complete) totals.push_back(static_cast<double>(total));
    }
    BoxplotRow row;
    row.t = t;
    row.n = static_cast<int>(totals.size());
    if (!totals.empty()) {
      double mean = 0.0;
      for (double v : totals) mean += v;
      row.mean = mean / static_cast<double>(totals.size());
      std::sort(totals.begin(), totals.end());
      auto rank = [&](double p) {
        std::size_t r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(totals.size())));
        r = std::clamp<std::size_t>(r, 1, totals.size());
        return totals[r - 1];
      };
      row.p10 = rank(0.10);
      row.p90 = rank(0.90);
    }
    rows.push_back(row);
  }
  return rows;
}

// --- emitters ---

namespace {
std::string slot_name(const schema::Schema& s, int slot) {
  return s.at(static_cast<std::size_t>(s.temporal_indices()[static_cast<std::size_t>(slot)])).name;
}
}  // namespace

void write_marginals_csv(const std::string& path, const std::vector<MarginalRow>& rows,
                         const schema::Schema& s) {
  CsvWriter out(path, {"variable", "month", "metric", "distance", "valid"});
  for (const auto& r : rows)
    out.row({slot_name(s, r.slot), std::to_string(3 * r.t), r.continuous ? "ks" : "tv",
             fmt_double(r.distance), r.valid ? "1" : "0"});
}

void write_correlations_csv(const std::string& path, const CorrelationReport& report,
                            const schema::Schema& s) {
  CsvWriter out(path,
                {"kind", "month", "variable_a", "variable_b", "corr_data", "corr_model", "weight"});
  auto dump = [&](const char* kind, const std::vector<CorrEntry>& entries) {
    for (const auto& e : entries) {
      if (!e.valid) continue;
      out.row({kind, e.t < 0 ? std::string("pooled") : std::to_string(3 * e.t),
               slot_name(s, e.slot_a), slot_name(s, e.slot_b), fmt_double(e.corr_real),
               fmt_double(e.corr_model), fmt_double(e.weight)});
    }
  };
  dump("equal_time", report.equal_time);
  dump("pooled", report.pooled);
  dump("lag1", report.lag1);
  dump("lag2", report.lag2);
}

void write_correlation_r2_csv(const std::string& path, const CorrelationReport& report) {
  CsvWriter out(path, {"kind", "weighted_r2"});
  out.row({"equal_time", fmt_double(report.r2_equal_time)});
  out.row({"lag1", fmt_double(report.r2_lag1)});
  out.row({"lag2", fmt_double(report.r2_lag2)});
}

void write_error_ratios_csv(const std::string& path, const std::vector<ErrorRatioRow>& rows,
                            const schema::Schema& s) {
  CsvWriter out(path, {"model", "variable", "readout_month", "rms", "rms_stderr", "truth_std",
                       "error_ratio", "n_test"});
  for (const auto& r : rows) {
    const std::string var =
        r.var_index < 0 ? "adas_change" : s.at(static_cast<std::size_t>(r.var_index)).name;
    out.row({r.model, var, std::to_string(3 * r.readout_t), fmt_double(r.rms),
             fmt_double(r.rms_stderr), fmt_double(r.truth_std), fmt_double(r.ratio),
             std::to_string(r.n_test)});
  }
}

void write_effect_sizes_csv(const std::string& path, const std::vector<EffectSizeRow>& rows) {
  CsvWriter out(path, {"variable", "abs_cohens_d", "mean_fast", "mean_slow", "group_size"});
  for (const auto& r : rows)
    out.row({r.variable, fmt_double(r.abs_d), fmt_double(r.mean_fast), fmt_double(r.mean_slow),
             std::to_string(r.group_size)});
}

void write_boxplot_csv(const std::string& path, const std::vector<BoxplotRow>& data_rows,
                       const std::vector<BoxplotRow>& model_rows) {
  CsvWriter out(path, {"source", "month", "mean", "p10", "p90", "n"});
  auto dump = [&](const char* source, const std::vector<BoxplotRow>& rows) {
    for (const auto& r : rows)
      out.row({source, std::to_string(3 * r.t), fmt_double(r.mean), fmt_double(r.p10),
               fmt_double(r.p90), std::to_string(r.n)});
  };
  dump("data", data_rows);
  dump("model", model_rows);
}

void write_zscores_csv(const std::string& path, const std::string& summary_path,
                       const std::vector<sim::ScoreChangeDistribution>& predictions,
                       const std::vector<std::pair<std::string, double>>& truths,
                       const ZCalibration& calib) {
  std::map<std::string, double> truth_of(truths.begin(), truths.end());
  {
    CsvWriter out(path, {"patient_id", "pred_mean", "pred_std", "true_change", "z"});
    for (const auto& p : predictions) {
      auto it = truth_of.find(p.patient_id);
      if (it == truth_of.end() || p.stddev <= 0.0) continue;
      out.row({p.patient_id, fmt_double(p.mean), fmt_double(p.stddev), fmt_double(it->second),
               fmt_double((p.mean - it->second) / p.stddev)});
    }
  }
  CsvWriter out(summary_path,
                {"mean_z", "std_z", "corr_absz_std", "n", "n_skipped_zero_std"});
  out.row({fmt_double(calib.mean_z), fmt_double(calib.std_z), fmt_double(calib.corr_absz_std),
           std::to_string(calib.z.size()), std::to_string(calib.n_skipped_zero_std)});
}

}  // namespace trajsim::eval
