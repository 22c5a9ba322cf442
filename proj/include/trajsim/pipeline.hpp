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

#ifndef TRAJSIM_PIPELINE_HPP
#define TRAJSIM_PIPELINE_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trajsim/layout.hpp"
#include "trajsim/schema.hpp"
#include "trajsim/types.hpp"

namespace trajsim::pipeline {

constexpr int kTimePoints = 7;       // months 0, 3, ..., 18
constexpr int kBucketDays = 90;
constexpr int kHalfWindowDays = 45;  // 90-day window centered on each time point

struct RawEvent {
  std::string patient_id;
  std::string variable;
  long day = 0;  // offset from baseline; negative only for screening visits
  std::string value;
};

std::vector<RawEvent> read_events_csv(const std::string& path);
void write_events_csv(const std::string& path, const std::vector<RawEvent>& events);

/// One patient's bucketed trajectory in canonical units: 7 time slots over
/// the temporal variables plus one static record. Missing entries are
/// nullopt (the encoder clears the matching mask bits).
struct PatientSeries {
  std::string patient_id;
  // [time][temporal slot], slots in schema temporal order.
  std::vector<std::vector<std::optional<schema::CanonicalValue>>> frames;
  // [static slot], schema static order.
  std::vector<std::optional<schema::CanonicalValue>> statics;
};

/// Window index for a day offset, or -1 when the event is out of range.
/// Windows are centered on day 90*k; an event equidistant between two
/// centers goes to the earlier window; screening days in [-45, 0) fold
/// into baseline; days before -45 are discarded.
int window_index(long day);

std::vector<PatientSeries> bucket_events(const std::vector<RawEvent>& events,
                                         const schema::Schema& s);

/// Patients with all 11 ADAS-Cog components (delayed word recall excluded)
/// present at month 15 or month 18.
std::vector<std::string> select_patients(const std::vector<PatientSeries>& series,
                                         const schema::Schema& s);

enum class Split { train, validation, test };
std::string split_name(Split s);
Split split_from_name(const std::string& name);

/// Random 70/5/25 split by patient, deterministic under seed. Fractions
/// are floor(0.70 n) / floor(0.05 n) / remainder.
std::map<std::string, Split> split_patients(const std::vector<std::string>& ids,
                                            std::uint64_t seed);

/// Per-variable log-standardization states fitted from the training split
/// only (split-pure by construction: callers pass the train id set).
struct Transforms {
  std::vector<std::optional<schema::TransformState>> by_var;  // schema order

  const schema::TransformState* get(int var_index) const {
    const auto& t = by_var[static_cast<std::size_t>(var_index)];
    return t.has_value() ? &*t : nullptr;
  }
};

Transforms fit_transforms(const std::vector<PatientSeries>& series,
                          const std::set<std::string>& train_ids, const schema::Schema& s);

/// Encodes one time slot of a series into a width_temporal span.
void encode_temporal_slot(const PatientSeries& series, int t, const schema::Schema& s,
                          const model::VisibleLayout& layout, const Transforms& transforms,
                          double* values, std::uint8_t* mask);
void encode_statics(const PatientSeries& series, const schema::Schema& s,
                    const model::VisibleLayout& layout, const Transforms& transforms,
                    double* values, std::uint8_t* mask);

/// Adjacent-pair training samples, layout [static | t | t+1].
struct Dataset {
  model::VisibleLayout layout;
  MatRX v;       // n_samples x total_width
  MatRXu8 mask;  // presence bits per coordinate
  std::vector<std::string> patient_ids;
  std::vector<int> source_t;

  Eigen::Index n() const { return v.rows(); }
};

/// Emits the 6 (t, t+1) pairs per patient for patients in `ids`, shuffled
/// under `seed` so minibatches mix patients and times.
Dataset make_pairs(const std::vector<PatientSeries>& series, const std::set<std::string>& ids,
                   const schema::Schema& s, const Transforms& transforms, std::uint64_t seed);

/// Processed store: one file per variable plus a manifest, schema text,
/// split assignment and fitted transforms.
void write_store(const std::string& dir, const std::vector<PatientSeries>& series,
                 const schema::Schema& s, const Transforms& transforms,
                 const std::map<std::string, Split>& splits);

struct Store {
  schema::Schema schema;
  std::vector<PatientSeries> series;
  Transforms transforms;
  std::map<std::string, Split> splits;

  std::vector<const PatientSeries*> split_series(Split s) const;
  std::set<std::string> split_ids(Split s) const;
};

Store read_store(const std::string& dir);

std::string sanitize_name(const std::string& name);

}  // namespace trajsim::pipeline

#endif  // TRAJSIM_PIPELINE_HPP
