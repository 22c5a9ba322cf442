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

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajsim/runner.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/parallel.hpp"

namespace {

// Environment overrides use the TRAJSIM_ prefix (TRAJSIM_SEED,
// TRAJSIM_THREADS, TRAJSIM_OUT); explicit flags win.
void apply_env_defaults(std::uint64_t& seed, int& threads, std::string& out_dir) {
  if (const char* v = std::getenv("TRAJSIM_SEED"); v && seed == 0)
    seed = std::strtoull(v, nullptr, 10);
  if (const char* v = std::getenv("TRAJSIM_THREADS"); v && threads == 0)
    threads = std::atoi(v);
  if (const char* v = std::getenv("TRAJSIM_OUT"); v && out_dir.empty()) out_dir = v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajsim: generative modeling of longitudinal patient trajectories"};
  app.set_version_flag("--version", std::string(trajsim::runner::kToolVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "run configuration file (key = value lines)");
  app.add_option("--seed", seed, "global seed; split into per-module streams");
  app.add_option("--threads", threads, "worker cap (0 = hardware concurrency)");
  app.add_option("--out", out_dir, "output directory");

  std::string events_csv, store_dir, model_path;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  auto* ingest = app.add_subcommand("ingest", "bucket raw events into the processed store");
  ingest->add_option("--events", events_csv, "raw events CSV")->required();
  auto* train = app.add_subcommand("train", "fit the generative model");
  train->add_option("--store", store_dir, "ingested store directory")->required();
  auto* simulate = app.add_subcommand("simulate", "simulate patient trajectories");
  simulate->add_option("--model", model_path, "trained model file")->required();
  simulate->add_option("--store", store_dir, "ingested store directory")->required();
  auto* baselines = app.add_subcommand("baselines", "fit supervised comparators");
  baselines->add_option("--store", store_dir, "ingested store directory")->required();
  auto* evaluate = app.add_subcommand("evaluate", "compute metric CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_env_defaults(seed, threads, out_dir);
    trajsim::set_threads(threads);
    trajsim::runner::RunOptions opts;
    if (!config_path.empty()) opts.config = trajsim::Config::load(config_path);
    opts.seed = seed;
    opts.threads = threads;
    opts.out_dir = out_dir;

    if (synth->parsed()) trajsim::runner::cmd_synth(opts);
    if (ingest->parsed()) trajsim::runner::cmd_ingest(events_csv, opts);
    if (train->parsed()) trajsim::runner::cmd_train(store_dir, opts);
    if (simulate->parsed()) trajsim::runner::cmd_simulate(model_path, store_dir, opts);
    if (baselines->parsed()) trajsim::runner::cmd_baselines(store_dir, opts);
    if (evaluate->parsed()) trajsim::runner::cmd_evaluate(opts);
  } catch (const trajsim::Error& e) {
    nlohmann::json err;
    err["error"] = e.code();
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = "Internal";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
