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

#include "trajsim/runner.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "trajsim/baselines.hpp"
#include "trajsim/crbm.hpp"
#include "trajsim/evaluate.hpp"
#include "trajsim/pipeline.hpp"
#include "trajsim/simulate.hpp"
#include "trajsim/synthgen.hpp"
#include "trajsim/training.hpp"
#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/hash.hpp"
#include "trajsim/util/parallel.hpp"

namespace fs = std::filesystem;

namespace trajsim::runner {

namespace {

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void ensure_out(const RunOptions& opts) {
  if (opts.out_dir.empty()) fail("ConfigInvalid", "--out directory required");
  fs::create_directories(opts.out_dir);
}

std::string joined(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

}  // namespace

void write_manifest(const std::string& out_dir, const std::string& command,
                    const RunOptions& opts, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["tool_version"] = kToolVersion;
  manifest["schema_version"] = schema::Schema::builtin().version();
  manifest["config_hash"] = fnv1a64(opts.config.canonical_text());
  manifest["seed"] = opts.seed;
  manifest["threads"] = opts.threads;
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  manifest["timestamp"] = iso_timestamp();
  std::ofstream out(joined(out_dir, "manifest.json"));
  out << manifest.dump(2) << "\n";
}

void cmd_synth(const RunOptions& opts) {
  opts.config.validate({"synth.n_patients", "synth.missing_rate", "synth.missing_adas",
                        "synth.missing_mmse", "synth.missing_lab", "synth.missing_clinical",
                        "synth.missing_background", "synth.dropout_scale", "synth.drift_slope",
                        "synth.latent_noise"});
  ensure_out(opts);
  synth::SynthConfig cfg;
  cfg.n_patients = static_cast<int>(opts.config.get_int("synth.n_patients", 1000));
  cfg.seed = opts.seed;
  const double rate = opts.config.get_real("synth.missing_rate", 0.15);
  cfg.missing_adas = opts.config.get_real("synth.missing_adas", rate);
  cfg.missing_mmse = opts.config.get_real("synth.missing_mmse", rate);
  cfg.missing_lab = opts.config.get_real("synth.missing_lab", rate);
  cfg.missing_clinical = opts.config.get_real("synth.missing_clinical", rate);
  cfg.missing_background = opts.config.get_real("synth.missing_background", 0.05);
  cfg.dropout_scale = opts.config.get_real("synth.dropout_scale", 0.04);
  cfg.drift_slope = opts.config.get_real("synth.drift_slope", 0.12);
  cfg.latent_noise = opts.config.get_real("synth.latent_noise", 0.25);

  const auto process = synth::GroundTruthProcess::standard(cfg);
  const auto cohort = synth::generate_cohort(process);
  synth::write_cohort(opts.out_dir, cohort, process.schema);
  write_manifest(opts.out_dir, "synth", opts, {},
                 {joined(opts.out_dir, "events.csv"), joined(opts.out_dir, "ground_truth.csv")});
}

void cmd_ingest(const std::string& events_csv, const RunOptions& opts) {
  opts.config.validate({"dataset.variables", "dataset.split_seed"});
  ensure_out(opts);
  const auto s = schema::Schema::builtin();
  const auto wanted = opts.config.get_list("dataset.variables");
  for (const auto& name : wanted)
    if (s.find(name) < 0) fail("UnknownVariable", name);

  const auto events = pipeline::read_events_csv(events_csv);
  auto series = pipeline::bucket_events(events, s);
  const auto selected = pipeline::select_patients(series, s);
  const std::set<std::string> selected_set(selected.begin(), selected.end());
  std::vector<pipeline::PatientSeries> kept;
  for (auto& p : series)
    if (selected_set.count(p.patient_id)) kept.push_back(std::move(p));

  const std::uint64_t split_seed = opts.config.has("dataset.split_seed")
                                       ? static_cast<std::uint64_t>(
                                             opts.config.get_int("dataset.split_seed", 0))
                                       : opts.seed;
  const auto splits = pipeline::split_patients(selected, split_seed);
  std::set<std::string> train_ids;
  for (const auto& [id, sp] : splits)
    if (sp == pipeline::Split::train) train_ids.insert(id);
  const auto transforms = pipeline::fit_transforms(kept, train_ids, s);
  pipeline::write_store(opts.out_dir, kept, s, transforms, splits);
  write_manifest(opts.out_dir, "ingest", opts, {events_csv},
                 {joined(opts.out_dir, "store"), joined(opts.out_dir, "splits.csv"),
                  joined(opts.out_dir, "transforms.csv")});
}

namespace {

pipeline::Dataset dataset_for(const pipeline::Store& store, pipeline::Split split,
                              std::uint64_t seed) {
  return pipeline::make_pairs(store.series, store.split_ids(split), store.schema,
                              store.transforms, seed);
}

}  // namespace

void cmd_train(const std::string& store_dir, const RunOptions& opts) {
  opts.config.validate({"train.epochs", "train.batch_size", "train.lr_initial", "train.lr_final",
                        "train.gamma", "train.mc_steps_sampling", "train.mc_steps_imputation",
                        "train.adversary_trees", "train.adversary_depth", "train.n_hidden",
                        "train.checkpoint_every", "train.weight_init_std"});
  ensure_out(opts);
  const auto store = pipeline::read_store(store_dir);

  train::TrainingConfig cfg;
  cfg.epochs = static_cast<int>(opts.config.get_int("train.epochs", 2000));
  cfg.batch_size = static_cast<int>(opts.config.get_int("train.batch_size", 100));
  cfg.lr_initial = opts.config.get_real("train.lr_initial", 0.005);
  cfg.lr_final = opts.config.get_real("train.lr_final", 0.0);
  cfg.gamma = opts.config.get_real("train.gamma", 0.3);
  cfg.mc_steps_sampling = static_cast<int>(opts.config.get_int("train.mc_steps_sampling", 50));
  cfg.mc_steps_imputation =
      static_cast<int>(opts.config.get_int("train.mc_steps_imputation", 2));
  cfg.adversary.n_trees = static_cast<int>(opts.config.get_int("train.adversary_trees", 5));
  cfg.adversary.max_depth = static_cast<int>(opts.config.get_int("train.adversary_depth", 5));
  cfg.n_hidden = static_cast<int>(opts.config.get_int("train.n_hidden", 50));
  cfg.weight_init_std = opts.config.get_real("train.weight_init_std", 0.01);
  cfg.checkpoint_every = static_cast<int>(opts.config.get_int("train.checkpoint_every", 0));
  cfg.checkpoint_dir = joined(opts.out_dir, "checkpoints");
  cfg.seed = opts.seed;

  const auto train_data = dataset_for(store, pipeline::Split::train, derive_seed(opts.seed, "dataset.train"));
  const auto val_data =
      dataset_for(store, pipeline::Split::validation, derive_seed(opts.seed, "dataset.validation"));

  auto result = train::fit(train_data, val_data, cfg);
  result.params.schema_hash = store.schema.hash();
  result.params.metadata["schema_version"] = store.schema.version();
  result.params.metadata["epochs"] = std::to_string(cfg.epochs);
  result.params.metadata["gamma"] = fmt_double(cfg.gamma);
  result.params.metadata["seed"] = std::to_string(cfg.seed);
  result.params.metadata["tool_version"] = kToolVersion;

  crbm::save_params(result.params, joined(opts.out_dir, "model.crbm"));
  {
    std::ofstream out(joined(opts.out_dir, "model.txt"));
    out << crbm::export_params_text(result.params);
  }
  train::write_monitor_csv(joined(opts.out_dir, "monitor.csv"), result.monitor);
  write_manifest(opts.out_dir, "train", opts, {store_dir},
                 {joined(opts.out_dir, "model.crbm"), joined(opts.out_dir, "model.txt"),
                  joined(opts.out_dir, "monitor.csv")});
}

void cmd_simulate(const std::string& model_path, const std::string& store_dir,
                  const RunOptions& opts) {
  opts.config.validate({"simulate.mode", "simulate.n", "simulate.n_draws", "simulate.horizon",
                        "simulate.split", "simulate.diagnosis", "simulate.adas_total",
                        "simulate.gibbs_steps", "simulate.baseline_equilibration",
                        "simulate.write_trajectories"});
  ensure_out(opts);
  const auto store = pipeline::read_store(store_dir);
  const auto params = crbm::load_params(model_path);
  if (params.schema_hash != store.schema.hash())
    fail("SchemaMismatch", "model schema hash does not match the dataset store");

  sim::SimulateConfig cfg;
  cfg.n_draws = static_cast<int>(opts.config.get_int("simulate.n_draws", 100));
  cfg.gibbs_steps = static_cast<int>(opts.config.get_int("simulate.gibbs_steps", 50));
  cfg.baseline_equilibration =
      static_cast<int>(opts.config.get_int("simulate.baseline_equilibration", 500));
  cfg.seed = opts.seed;
  const int horizon = static_cast<int>(opts.config.get_int("simulate.horizon", 6));
  const std::string mode = opts.config.get_string("simulate.mode", "conditional");
  const bool write_traj = opts.config.get_bool("simulate.write_trajectories", true);

  std::vector<std::string> outputs;
  if (mode == "conditional") {
    const auto split =
        pipeline::split_from_name(opts.config.get_string("simulate.split", "test"));
    const auto patients = store.split_series(split);
    if (patients.empty()) fail("EmptyDataset", "no patients in requested split");
    std::vector<sim::TrajectoryEnsemble> ensembles;
    ensembles.reserve(patients.size());
    for (const auto* p : patients)
      ensembles.push_back(
          sim::simulate_conditional(*p, params, store.schema, store.transforms, cfg, horizon));
    sim::write_summary_csv(joined(opts.out_dir, "summary.csv"), ensembles, store.schema);
    outputs.push_back(joined(opts.out_dir, "summary.csv"));
    // Score-change distributions for every patient with a valid baseline
    // ADAS, all readouts to the horizon.
    std::vector<sim::ScoreChangeDistribution> changes;
    for (std::size_t i = 0; i < ensembles.size(); ++i) {
      bool baseline_ok = true;
      try {
        std::vector<std::optional<double>> base_vals;
        for (const auto& v : patients[i]->frames[0])
          base_vals.push_back(v.has_value() ? std::optional<double>(std::get<double>(*v))
                                            : std::nullopt);
        sim::adas_total(store.schema, base_vals);
      } catch (const Error&) {
        baseline_ok = false;
      }
      if (!baseline_ok) continue;
      for (int r = 1; r <= horizon; ++r)
        changes.push_back(
            sim::predict_score_change(ensembles[i], *patients[i], store.schema, r));
    }
    sim::write_score_changes_csv(joined(opts.out_dir, "score_changes.csv"), changes);
    outputs.push_back(joined(opts.out_dir, "score_changes.csv"));
    if (write_traj) {
      sim::write_trajectories_csv(joined(opts.out_dir, "trajectories.csv"), ensembles,
                                  store.schema);
      sim::write_baselines_csv(joined(opts.out_dir, "baselines.csv"), ensembles, store.schema);
      outputs.push_back(joined(opts.out_dir, "trajectories.csv"));
      outputs.push_back(joined(opts.out_dir, "baselines.csv"));
    }
  } else if (mode == "generative" || mode == "progressor") {
    const int n = static_cast<int>(opts.config.get_int("simulate.n", 478));
    std::vector<sim::TrajectoryEnsemble> ensembles;
    if (mode == "generative") {
      ensembles = sim::simulate_generative(n, params, store.schema, store.transforms, cfg);
    } else {
      const std::string diagnosis = opts.config.get_string("simulate.diagnosis", "MCI");
      const int target = static_cast<int>(opts.config.get_int("simulate.adas_total", 10));
      ensembles = sim::simulate_progressor_population(n, diagnosis == "AD", target, params,
                                                      store.schema, store.transforms, cfg);
    }
    sim::write_trajectories_csv(joined(opts.out_dir, "trajectories.csv"), ensembles,
                                store.schema);
    sim::write_baselines_csv(joined(opts.out_dir, "baselines.csv"), ensembles, store.schema);
    outputs.push_back(joined(opts.out_dir, "trajectories.csv"));
    outputs.push_back(joined(opts.out_dir, "baselines.csv"));
  } else {
    fail("ConfigInvalid", "simulate.mode must be conditional|generative|progressor");
  }
  write_manifest(opts.out_dir, "simulate", opts, {model_path, store_dir}, outputs);
}

void cmd_baselines(const std::string& store_dir, const RunOptions& opts) {
  opts.config.validate({"baselines.supervised", "baselines.forecasters", "baselines.global",
                        "baselines.readouts"});
  ensure_out(opts);
  const auto store = pipeline::read_store(store_dir);
  // Supervised comparators train on the training + validation groups.
  std::vector<const pipeline::PatientSeries*> train_series = store.split_series(pipeline::Split::train);
  for (const auto* p : store.split_series(pipeline::Split::validation)) train_series.push_back(p);
  const auto test_series = store.split_series(pipeline::Split::test);

  std::vector<int> readouts = {1, 2, 3, 4, 5, 6};
  if (opts.config.has("baselines.readouts")) {
    readouts.clear();
    for (const auto& m : opts.config.get_list("baselines.readouts"))
      readouts.push_back(std::atoi(m.c_str()) / 3);
  }

  std::vector<baselines::PredictionSet> supervised, forecasts;
  if (opts.config.get_bool("baselines.supervised", true)) {
    for (int r : readouts) {
      const auto task = baselines::prepare_supervised(train_series, test_series, store.schema,
                                                      store.transforms, r);
      if (task.y.size() == 0 || task.y_test.size() == 0) continue;
      baselines::CvPlan plan;
      plan.seed = derive_seed(opts.seed, "baselines.cv", static_cast<std::uint64_t>(r));
      supervised.push_back(baselines::run_ridge(task, plan, r));
      supervised.push_back(baselines::run_rf(task, plan, r));
      supervised.push_back(baselines::run_mlp(task, plan, r));
    }
  }
  if (opts.config.get_bool("baselines.forecasters", true)) {
    forecasts = baselines::run_forecasters(train_series, test_series, store.schema,
                                           store.transforms, opts.seed,
                                           opts.config.get_bool("baselines.global", true));
  }

  std::vector<std::string> outputs;
  if (!supervised.empty()) {
    baselines::write_predictions_csv(joined(opts.out_dir, "supervised_preds.csv"), supervised,
                                     store.schema);
    CsvWriter cv(joined(opts.out_dir, "supervised_cv.csv"),
                 {"model", "readout_month", "hyperparameter", "cv_rms"});
    for (const auto& set : supervised)
      cv.row({set.model, std::to_string(3 * set.readout_t), set.hyperparameter,
              fmt_double(set.cv_rms)});
    outputs.push_back(joined(opts.out_dir, "supervised_preds.csv"));
    outputs.push_back(joined(opts.out_dir, "supervised_cv.csv"));
  }
  if (!forecasts.empty()) {
    baselines::write_predictions_csv(joined(opts.out_dir, "forecaster_preds.csv"), forecasts,
                                     store.schema);
    outputs.push_back(joined(opts.out_dir, "forecaster_preds.csv"));
  }
  // RMS summary over everything produced here.
  {
    CsvWriter results(joined(opts.out_dir, "baselines_results.csv"),
                      {"model", "variable", "readout_month", "rms", "rms_stderr", "n_test"});
    auto dump = [&](const std::vector<baselines::PredictionSet>& sets) {
      for (const auto& set : sets) {
        if (set.truth.size() == 0) continue;
        const auto row = eval::error_ratio(set);
        const std::string var = set.var_index < 0
                                    ? "adas_change"
                                    : store.schema.at(static_cast<std::size_t>(set.var_index)).name;
        results.row({set.model, var, std::to_string(3 * set.readout_t), fmt_double(row.rms),
                     fmt_double(row.rms_stderr), std::to_string(row.n_test)});
      }
    };
    dump(supervised);
    dump(forecasts);
    outputs.push_back(joined(opts.out_dir, "baselines_results.csv"));
  }
  write_manifest(opts.out_dir, "baselines", opts, {store_dir}, outputs);
}

namespace {

struct SummaryMeans {
  // (patient, slot, t) -> mean over draws
  std::map<std::string, double> by_key;
  static std::string key(const std::string& pid, const std::string& var, int month) {
    return pid + "|" + var + "|" + std::to_string(month);
  }
};

SummaryMeans read_summary_means(const std::string& path) {
  SummaryMeans means;
  const CsvTable table = read_csv(path);
  for (const auto& row : table.rows)
    means.by_key[SummaryMeans::key(row[0], row[2], std::atoi(row[1].c_str()))] =
        std::strtod(row[3].c_str(), nullptr);
  return means;
}

}  // namespace

void cmd_evaluate(const RunOptions& opts) {
  opts.config.validate({"eval.store_dir", "eval.generative_dir", "eval.conditional_dir",
                        "eval.progressor_dir", "eval.predictions", "eval.supervised_predictions",
                        "eval.split"});
  ensure_out(opts);
  const std::string store_dir = opts.config.get_string("eval.store_dir", "");
  if (store_dir.empty()) fail("ConfigInvalid", "eval.store_dir required");
  const auto store = pipeline::read_store(store_dir);
  const auto& s = store.schema;
  const auto split = pipeline::split_from_name(opts.config.get_string("eval.split", "test"));
  const auto real_series = store.split_series(split);
  const auto real_view = eval::view_of_series(real_series, s);
  const auto temporal = s.temporal_indices();
  std::map<int, int> tslot;
  for (std::size_t k = 0; k < temporal.size(); ++k) tslot[temporal[k]] = static_cast<int>(k);

  std::vector<std::string> inputs = {store_dir};
  std::vector<std::string> outputs;

  const std::string generative_dir = opts.config.get_string("eval.generative_dir", "");
  if (!generative_dir.empty()) {
    inputs.push_back(generative_dir);
    auto ensembles = sim::read_trajectories_csv(joined(generative_dir, "trajectories.csv"), s);
    for (const bool censored : {false, true}) {
      const auto synth_view = eval::view_of_ensembles(ensembles, s, censored);
      const std::string suffix = censored ? "_censored" : "";
      const auto marginals = eval::marginal_report(real_view, synth_view, s);
      eval::write_marginals_csv(joined(opts.out_dir, "figS2_marginals" + suffix + ".csv"),
                                marginals, s);
      const auto corr = eval::correlation_report(real_view, synth_view, s);
      eval::write_correlations_csv(joined(opts.out_dir, "fig2_correlations" + suffix + ".csv"),
                                   corr, s);
      eval::write_correlation_r2_csv(joined(opts.out_dir, "fig2_r2" + suffix + ".csv"), corr);
      eval::write_boxplot_csv(joined(opts.out_dir, "fig4a_boxplot" + suffix + ".csv"),
                              eval::population_boxplot_series(real_view, s),
                              eval::population_boxplot_series(synth_view, s));
      outputs.push_back(joined(opts.out_dir, "figS2_marginals" + suffix + ".csv"));
      outputs.push_back(joined(opts.out_dir, "fig2_correlations" + suffix + ".csv"));
      outputs.push_back(joined(opts.out_dir, "fig2_r2" + suffix + ".csv"));
      outputs.push_back(joined(opts.out_dir, "fig4a_boxplot" + suffix + ".csv"));
    }
  }

  const std::string conditional_dir = opts.config.get_string("eval.conditional_dir", "");
  const std::string predictions_path = opts.config.get_string("eval.predictions", "");
  std::map<std::string, const pipeline::PatientSeries*> series_of;
  for (const auto* p : real_series) series_of[p->patient_id] = p;

  if (!conditional_dir.empty() && !predictions_path.empty()) {
    inputs.push_back(conditional_dir);
    inputs.push_back(predictions_path);
    const auto means = read_summary_means(joined(conditional_dir, "summary.csv"));
    const auto forecaster_sets = baselines::read_predictions_csv(predictions_path, s);
    std::vector<eval::ErrorRatioRow> rows;
    for (const auto& set : forecaster_sets) {
      if (set.var_index < 0) continue;
      rows.push_back(eval::error_ratio(set));
      if (set.model != "rf_pervar") continue;
      // CRBM conditional means on the identical test set.
      baselines::PredictionSet crbm_set;
      crbm_set.model = "crbm";
      crbm_set.var_index = set.var_index;
      crbm_set.readout_t = set.readout_t;
      crbm_set.patient_ids = set.patient_ids;
      crbm_set.truth = set.truth;
      crbm_set.pred.resize(set.truth.size());
      const std::string var_name = s.at(static_cast<std::size_t>(set.var_index)).name;
      for (std::size_t i = 0; i < set.patient_ids.size(); ++i) {
        const auto key =
            SummaryMeans::key(set.patient_ids[i], var_name, 3 * set.readout_t);
        auto it = means.by_key.find(key);
        if (it == means.by_key.end())
          fail("MissingInput", "summary.csv lacks " + key);
        crbm_set.pred(static_cast<Eigen::Index>(i)) = it->second;
      }
      rows.push_back(eval::error_ratio(crbm_set));
    }
    eval::write_error_ratios_csv(joined(opts.out_dir, "fig3_error_ratios.csv"), rows, s);
    outputs.push_back(joined(opts.out_dir, "fig3_error_ratios.csv"));
  }

  const std::string supervised_path = opts.config.get_string("eval.supervised_predictions", "");
  if (!conditional_dir.empty()) {
    const auto changes =
        sim::read_score_changes_csv(joined(conditional_dir, "score_changes.csv"));
    // True ADAS changes for test patients with complete baseline + readout.
    auto true_change = [&](const std::string& pid, int readout) -> std::optional<double> {
      auto it = series_of.find(pid);
      if (it == series_of.end()) return std::nullopt;
      const auto slots = sim::adas_component_slots(s);
      int base = 0, out = 0;
      for (int slot : slots) {
        const auto& b = it->second->frames[0][static_cast<std::size_t>(slot)];
        const auto& r =
            it->second->frames[static_cast<std::size_t>(readout)][static_cast<std::size_t>(slot)];
        if (!b.has_value() || !r.has_value()) return std::nullopt;
        base += static_cast<int>(std::lround(std::get<double>(*b)));
        out += static_cast<int>(std::lround(std::get<double>(*r)));
      }
      return static_cast<double>(out - base);
    };

    if (!supervised_path.empty()) {
      inputs.push_back(supervised_path);
      const auto supervised_sets = baselines::read_predictions_csv(supervised_path, s);
      std::vector<eval::ErrorRatioRow> rows;
      std::set<int> readouts_seen;
      for (const auto& set : supervised_sets) {
        if (set.var_index >= 0) continue;
        rows.push_back(eval::error_ratio(set));
        readouts_seen.insert(set.readout_t);
      }
      // CRBM on the same test patients (taken from the first supervised set
      // per readout).
      for (int r : readouts_seen) {
        const baselines::PredictionSet* ref = nullptr;
        for (const auto& set : supervised_sets)
          if (set.var_index < 0 && set.readout_t == r) {
            ref = &set;
            break;
          }
        if (!ref) continue;
        std::map<std::string, double> crbm_mean;
        for (const auto& c : changes)
          if (c.readout_t == r) crbm_mean[c.patient_id] = c.mean;
        baselines::PredictionSet crbm_set;
        crbm_set.model = "crbm";
        crbm_set.var_index = -1;
        crbm_set.readout_t = r;
        crbm_set.patient_ids = ref->patient_ids;
        crbm_set.truth = ref->truth;
        crbm_set.pred.resize(ref->truth.size());
        for (std::size_t i = 0; i < ref->patient_ids.size(); ++i) {
          auto it = crbm_mean.find(ref->patient_ids[i]);
          if (it == crbm_mean.end())
            fail("MissingInput", "score_changes.csv lacks patient " + ref->patient_ids[i]);
          crbm_set.pred(static_cast<Eigen::Index>(i)) = it->second;
        }
        rows.push_back(eval::error_ratio(crbm_set));
      }
      CsvWriter out(joined(opts.out_dir, "fig4b_rms.csv"),
                    {"model", "readout_month", "rms", "rms_stderr", "n_test"});
      std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.readout_t != b.readout_t ? a.readout_t < b.readout_t : a.model < b.model;
      });
      for (const auto& row : rows)
        out.row({row.model, std::to_string(3 * row.readout_t), fmt_double(row.rms),
                 fmt_double(row.rms_stderr), std::to_string(row.n_test)});
      outputs.push_back(joined(opts.out_dir, "fig4b_rms.csv"));
    }

    // z calibration at the 18-month readout.
    std::vector<sim::ScoreChangeDistribution> changes18;
    std::vector<std::pair<std::string, double>> truths18;
    for (const auto& c : changes) {
      if (c.readout_t != 6) continue;
      const auto truth = true_change(c.patient_id, 6);
      if (!truth.has_value()) continue;
      changes18.push_back(c);
      truths18.emplace_back(c.patient_id, *truth);
    }
    const auto calib = eval::z_calibration(changes18, truths18);
    eval::write_zscores_csv(joined(opts.out_dir, "figS7_zscores.csv"),
                            joined(opts.out_dir, "figS7_summary.csv"), changes18, truths18,
                            calib);
    outputs.push_back(joined(opts.out_dir, "figS7_zscores.csv"));
    outputs.push_back(joined(opts.out_dir, "figS7_summary.csv"));
  }

  const std::string progressor_dir = opts.config.get_string("eval.progressor_dir", "");
  if (!progressor_dir.empty()) {
    inputs.push_back(progressor_dir);
    auto ensembles = sim::read_trajectories_csv(joined(progressor_dir, "trajectories.csv"), s);
    sim::read_baselines_into(joined(progressor_dir, "baselines.csv"), ensembles, s);
    const auto effect_sizes = eval::progressor_analysis(ensembles, s, 0.05);
    eval::write_effect_sizes_csv(joined(opts.out_dir, "fig4c_effect_sizes.csv"), effect_sizes);
    outputs.push_back(joined(opts.out_dir, "fig4c_effect_sizes.csv"));
  }

  write_manifest(opts.out_dir, "evaluate", opts, inputs, outputs);
}

}  // namespace trajsim::runner
