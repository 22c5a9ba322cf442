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

#ifndef TRAJSIM_RUNNER_HPP
#define TRAJSIM_RUNNER_HPP

#include <string>
#include <vector>

#include "trajsim/util/config.hpp"

namespace trajsim::runner {

inline constexpr const char* kToolVersion = "trajsim 0.1.0";

/// Shared command options (the CLI's --config/--seed/--threads/--out).
struct RunOptions {
  Config config;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware
  std::string out_dir;
};

// Every command validates its config keys, runs deterministically under
// the seed, and writes one manifest.json next to its outputs.

/// Synthetic cohort: events.csv + ground_truth.csv.
void cmd_synth(const RunOptions& opts);

/// Raw events -> bucketed store + selection + split + transforms.
void cmd_ingest(const std::string& events_csv, const RunOptions& opts);

/// Store -> model.crbm + model.txt + monitor.csv (+ checkpoints).
void cmd_train(const std::string& store_dir, const RunOptions& opts);

/// Model + store -> trajectories / summaries / score changes, in
/// conditional, generative or progressor mode.
void cmd_simulate(const std::string& model_path, const std::string& store_dir,
                  const RunOptions& opts);

/// Store -> supervised + forecaster predictions and CV records.
void cmd_baselines(const std::string& store_dir, const RunOptions& opts);

/// Metric CSVs from store + simulation outputs + baseline predictions.
void cmd_evaluate(const RunOptions& opts);

void write_manifest(const std::string& out_dir, const std::string& command,
                    const RunOptions& opts, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs);

}  // namespace trajsim::runner

#endif  // TRAJSIM_RUNNER_HPP
