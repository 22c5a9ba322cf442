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

#include "trajsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "trajsim/util/csv.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/rng.hpp"

namespace fs = std::filesystem;

namespace trajsim::pipeline {

std::vector<RawEvent> read_events_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  const int c_pid = table.column("patient_id");
  const int c_var = table.column("variable");
  const int c_day = table.column("day");
  const int c_val = table.column("value");
  if (c_pid < 0 || c_var < 0 || c_day < 0 || c_val < 0)
    fail("MissingInput", path + ": expected header patient_id,variable,day,value");
  std::vector<RawEvent> events;
  events.reserve(table.rows.size());
  for (auto& row : table.rows) {
    RawEvent e;
    e.patient_id = row[static_cast<std::size_t>(c_pid)];
    e.variable = row[static_cast<std::size_t>(c_var)];
    e.day = std::strtol(row[static_cast<std::size_t>(c_day)].c_str(), nullptr, 10);
    e.value = row[static_cast<std::size_t>(c_val)];
    events.push_back(std::move(e));
  }
  return events;
}

void write_events_csv(const std::string& path, const std::vector<RawEvent>& events) {
  CsvWriter out(path, {"patient_id", "variable", "day", "value"});
  for (const auto& e : events)
    out.row({e.patient_id, e.variable, std::to_string(e.day), e.value});
}

int window_index(long day) {
  if (day < -kHalfWindowDays) return -1;
  // ceil((day - 45) / 90), so day 90k + 45 lands in window k.
  const long num = day - kHalfWindowDays;
  long k = num >= 0 ? (num + kBucketDays - 1) / kBucketDays : num / kBucketDays;
  if (k < 0) k = 0;
  if (k >= kTimePoints) return -1;
  return static_cast<int>(k);
}

namespace {

struct Accumulator {
  double sum = 0.0;
  int count = 0;
  std::vector<std::string> labels;  // categorical values in arrival order

  void add_numeric(double v) {
    sum += v;
    ++count;
  }
};

std::optional<schema::CanonicalValue> finish(const Accumulator& acc,
                                             const schema::VariableSpec& spec) {
  using Tag = schema::VariableKind::Tag;
  if (spec.kind.tag == Tag::categorical) {
    if (acc.labels.empty()) return std::nullopt;
    // Modal label; ties resolved by arrival order.
    std::string best;
    int best_count = 0;
    for (std::size_t i = 0; i < acc.labels.size(); ++i) {
      int c = 0;
      for (const auto& l : acc.labels)
        if (l == acc.labels[i]) ++c;
      if (c > best_count) {
        best_count = c;
        best = acc.labels[i];
      }
    }
    return schema::CanonicalValue{best};
  }
  if (acc.count == 0) return std::nullopt;
  double mean = acc.sum / acc.count;
  if (spec.kind.tag == Tag::ordinal) {
    mean = std::round(mean);
    mean = std::clamp(mean, static_cast<double>(spec.kind.ord_min),
                      static_cast<double>(spec.kind.ord_max));
  } else if (spec.kind.tag == Tag::binary) {
    mean = mean >= 0.5 ? 1.0 : 0.0;
  }
  return schema::CanonicalValue{mean};
}

}  // namespace

std::vector<PatientSeries> bucket_events(const std::vector<RawEvent>& events,
                                         const schema::Schema& s) {
  const auto temporal = s.temporal_indices();
  const auto statics = s.static_indices();
  const int dropout_var = s.dropout_index();
  std::unordered_map<int, int> temporal_slot, static_slot;
  for (std::size_t i = 0; i < temporal.size(); ++i) temporal_slot[temporal[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < statics.size(); ++i) static_slot[statics[i]] = static_cast<int>(i);
  const int dropout_slot = temporal_slot.at(dropout_var);

  struct Work {
    std::vector<std::vector<Accumulator>> frames;  // [time][temporal slot]
    std::vector<Accumulator> statics;
    long dropout_day = -1;
    bool has_dropout_event = false;
  };
  std::unordered_map<std::string, Work> by_patient;

  for (const auto& e : events) {
    const int var = s.find(e.variable);
    if (var < 0) fail("UnknownVariable", e.variable);
    const auto& spec = s.at(static_cast<std::size_t>(var));
    auto& work = by_patient[e.patient_id];
    if (work.frames.empty()) {
      work.frames.assign(kTimePoints, std::vector<Accumulator>(temporal.size()));
      work.statics.assign(statics.size(), Accumulator{});
    }
    if (var == dropout_var) {
      // Disposition event: the flag is derived below, not bucket-averaged.
      const auto v = schema::parse_raw(e.value, spec);
      if (std::get<double>(v) != 0.0) {
        if (!work.has_dropout_event || e.day < work.dropout_day) work.dropout_day = e.day;
        work.has_dropout_event = true;
      }
      continue;
    }
    const auto value = schema::parse_raw(e.value, spec);
    if (spec.temporal) {
      const int w = window_index(e.day);
      if (w < 0) continue;  // outside the modeled horizon
      auto& acc = work.frames[static_cast<std::size_t>(w)][static_cast<std::size_t>(
          temporal_slot.at(var))];
      acc.add_numeric(schema::canonical_as_double(value, spec));
    } else {
      auto& acc = work.statics[static_cast<std::size_t>(static_slot.at(var))];
      if (spec.kind.tag == schema::VariableKind::Tag::categorical)
        acc.labels.push_back(std::get<std::string>(value));
      else
        acc.add_numeric(schema::canonical_as_double(value, spec));
    }
  }

  std::vector<std::string> ids;
  ids.reserve(by_patient.size());
  for (const auto& [id, work] : by_patient) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  std::vector<PatientSeries> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const Work& work = by_patient.at(id);
    PatientSeries series;
    series.patient_id = id;
    series.frames.assign(kTimePoints,
                         std::vector<std::optional<schema::CanonicalValue>>(temporal.size()));
    series.statics.resize(statics.size());
    for (std::size_t k = 0; k < statics.size(); ++k)
      series.statics[k] = finish(work.statics[k], s.at(static_cast<std::size_t>(statics[k])));
    int last_observed = -1;
    for (int t = 0; t < kTimePoints; ++t) {
      bool any = false;
      for (std::size_t k = 0; k < temporal.size(); ++k) {
        if (static_cast<int>(k) == dropout_slot) continue;
        auto v = finish(work.frames[static_cast<std::size_t>(t)][k],
                        s.at(static_cast<std::size_t>(temporal[k])));
        if (v.has_value()) any = true;
        series.frames[static_cast<std::size_t>(t)][k] = std::move(v);
      }
      if (any) last_observed = t;
    }

    // Dropout flag from disposition: frame t is 1 iff the event fell in
    // (t, t+1] and nothing is observed later; earlier frames are observed 0;
    // frames after dropout are fully masked. Without an event, trailing
    // frames (no later data) leave the flag unknown.
    int dropout_at = -1;
    if (work.has_dropout_event) {
      long td = work.dropout_day <= 0 ? 0 : (work.dropout_day + kBucketDays - 1) / kBucketDays - 1;
      if (td < 0) td = 0;
      if (td < kTimePoints && td >= static_cast<long>(last_observed)) dropout_at = static_cast<int>(td);
    }
    for (int t = 0; t < kTimePoints; ++t) {
      auto& flag = series.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(dropout_slot)];
      if (dropout_at >= 0) {
        if (t < dropout_at)
          flag = schema::CanonicalValue{0.0};
        else if (t == dropout_at)
          flag = schema::CanonicalValue{1.0};
        else
          series.frames[static_cast<std::size_t>(t)]
              .assign(temporal.size(), std::nullopt);  // fully masked after dropout
      } else {
        if (t < last_observed)
          flag = schema::CanonicalValue{0.0};
        else
          flag = std::nullopt;
      }
    }
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<std::string> select_patients(const std::vector<PatientSeries>& series,
                                         const schema::Schema& s) {
  // The 11 scored ADAS-Cog components (delayed word recall excluded).
  std::vector<int> adas_slots;
  const auto temporal = s.temporal_indices();
  for (std::size_t k = 0; k < temporal.size(); ++k) {
    const auto& spec = s.at(static_cast<std::size_t>(temporal[k]));
    if (spec.category == schema::Category::adas && spec.name != "ADAS Delayed Word Recall")
      adas_slots.push_back(static_cast<int>(k));
  }
  std::vector<std::string> kept;
  for (const auto& p : series) {
    auto complete_at = [&](int t) {
      for (int k : adas_slots)
        if (!p.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)].has_value())
          return false;
      return true;
    };
    if (complete_at(5) || complete_at(6)) kept.push_back(p.patient_id);
  }
  return kept;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  fail("ConfigInvalid", "unknown split: " + name);
}

std::map<std::string, Split> split_patients(const std::vector<std::string>& ids,
                                            std::uint64_t seed) {
  if (ids.empty()) fail("EmptyDataset", "split_patients: no ids");
  std::vector<std::string> sorted(ids);
  std::sort(sorted.begin(), sorted.end());
  Rng rng(derive_seed(seed, "pipeline.split"));
  for (std::size_t i = sorted.size(); i > 1; --i)
    std::swap(sorted[i - 1], sorted[rng.below(i)]);
  const std::size_t n = sorted.size();
  const std::size_t n_train = 7 * n / 10;
  const std::size_t n_val = n / 20;
  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < n; ++i)
    out[sorted[i]] = i < n_train ? Split::train
                     : i < n_train + n_val ? Split::validation
                                           : Split::test;
  return out;
}

Transforms fit_transforms(const std::vector<PatientSeries>& series,
                          const std::set<std::string>& train_ids, const schema::Schema& s) {
  Transforms transforms;
  transforms.by_var.resize(s.size());
  const auto temporal = s.temporal_indices();
  const auto statics = s.static_indices();
  for (std::size_t var = 0; var < s.size(); ++var) {
    const auto& spec = s.at(var);
    if (spec.kind.tag != schema::VariableKind::Tag::continuous_positive) continue;
    std::vector<double> values;
    for (const auto& p : series) {
      if (!train_ids.count(p.patient_id)) continue;
      if (spec.temporal) {
        const auto it = std::find(temporal.begin(), temporal.end(), static_cast<int>(var));
        const std::size_t slot = static_cast<std::size_t>(it - temporal.begin());
        for (int t = 0; t < kTimePoints; ++t) {
          const auto& v = p.frames[static_cast<std::size_t>(t)][slot];
          if (v.has_value()) values.push_back(std::get<double>(*v));
        }
      } else {
        const auto it = std::find(statics.begin(), statics.end(), static_cast<int>(var));
        const auto& v = p.statics[static_cast<std::size_t>(it - statics.begin())];
        if (v.has_value()) values.push_back(std::get<double>(*v));
      }
    }
    transforms.by_var[var] =
        values.empty() ? schema::TransformState{} : schema::fit_transform(values);
  }
  return transforms;
}

void encode_temporal_slot(const PatientSeries& series, int t, const schema::Schema& s,
                          const model::VisibleLayout& layout, const Transforms& transforms,
                          double* values, std::uint8_t* mask) {
  const auto temporal = s.temporal_indices();
  int offset = 0;
  for (std::size_t k = 0; k < temporal.size(); ++k) {
    const auto& spec = s.at(static_cast<std::size_t>(temporal[k]));
    const auto enc = schema::encode_value(series.frames[static_cast<std::size_t>(t)][k], spec,
                                          transforms.get(temporal[k]));
    for (std::size_t j = 0; j < enc.values.size(); ++j) {
      values[offset + static_cast<int>(j)] = enc.values[j];
      mask[offset + static_cast<int>(j)] = enc.present ? 1 : 0;
    }
    offset += spec.kind.encoded_width();
  }
  if (offset != layout.width_temporal) fail("DimensionMismatch", "encode_temporal_slot");
}

void encode_statics(const PatientSeries& series, const schema::Schema& s,
                    const model::VisibleLayout& layout, const Transforms& transforms,
                    double* values, std::uint8_t* mask) {
  const auto statics = s.static_indices();
  int offset = 0;
  for (std::size_t k = 0; k < statics.size(); ++k) {
    const auto& spec = s.at(static_cast<std::size_t>(statics[k]));
    const auto enc =
        schema::encode_value(series.statics[k], spec, transforms.get(statics[k]));
    for (std::size_t j = 0; j < enc.values.size(); ++j) {
      values[offset + static_cast<int>(j)] = enc.values[j];
      mask[offset + static_cast<int>(j)] = enc.present ? 1 : 0;
    }
    offset += spec.kind.encoded_width();
  }
  if (offset != layout.width_static) fail("DimensionMismatch", "encode_statics");
}

Dataset make_pairs(const std::vector<PatientSeries>& series, const std::set<std::string>& ids,
                   const schema::Schema& s, const Transforms& transforms, std::uint64_t seed) {
  Dataset ds;
  ds.layout = model::VisibleLayout::from_schema(s);
  const int ws = ds.layout.width_static;
  const int wt = ds.layout.width_temporal;
  std::vector<const PatientSeries*> selected;
  for (const auto& p : series)
    if (ids.count(p.patient_id)) selected.push_back(&p);

  const Eigen::Index n = static_cast<Eigen::Index>(selected.size()) * (kTimePoints - 1);
  ds.v.setZero(n, ds.layout.total_width);
  ds.mask.setZero(n, ds.layout.total_width);
  ds.patient_ids.resize(static_cast<std::size_t>(n));
  ds.source_t.resize(static_cast<std::size_t>(n));

  std::vector<double> stat_vals(static_cast<std::size_t>(ws));
  std::vector<std::uint8_t> stat_mask(static_cast<std::size_t>(ws));
  std::vector<double> slot_vals(static_cast<std::size_t>(wt));
  std::vector<std::uint8_t> slot_mask(static_cast<std::size_t>(wt));

  Eigen::Index row = 0;
  for (const auto* p : selected) {
    encode_statics(*p, s, ds.layout, transforms, stat_vals.data(), stat_mask.data());
    // Encode the 7 slots once, then assemble 6 adjacent pairs.
    MatRX slots(kTimePoints, wt);
    MatRXu8 slot_masks(kTimePoints, wt);
    for (int t = 0; t < kTimePoints; ++t) {
      encode_temporal_slot(*p, t, s, ds.layout, transforms, slot_vals.data(), slot_mask.data());
      for (int j = 0; j < wt; ++j) {
        slots(t, j) = slot_vals[static_cast<std::size_t>(j)];
        slot_masks(t, j) = slot_mask[static_cast<std::size_t>(j)];
      }
    }
    for (int t = 0; t + 1 < kTimePoints; ++t, ++row) {
      for (int j = 0; j < ws; ++j) {
        ds.v(row, j) = stat_vals[static_cast<std::size_t>(j)];
        ds.mask(row, j) = stat_mask[static_cast<std::size_t>(j)];
      }
      ds.v.row(row).segment(ws, wt) = slots.row(t);
      ds.mask.row(row).segment(ws, wt) = slot_masks.row(t);
      ds.v.row(row).segment(ws + wt, wt) = slots.row(t + 1);
      ds.mask.row(row).segment(ws + wt, wt) = slot_masks.row(t + 1);
      ds.patient_ids[static_cast<std::size_t>(row)] = p->patient_id;
      ds.source_t[static_cast<std::size_t>(row)] = t;
    }
  }

  // Shuffle rows so minibatches mix patients and times.
  Rng rng(derive_seed(seed, "pipeline.shuffle"));
  for (Eigen::Index i = n; i > 1; --i) {
    const Eigen::Index j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i)));
    ds.v.row(i - 1).swap(ds.v.row(j));
    ds.mask.row(i - 1).swap(ds.mask.row(j));
    std::swap(ds.patient_ids[static_cast<std::size_t>(i - 1)],
              ds.patient_ids[static_cast<std::size_t>(j)]);
    std::swap(ds.source_t[static_cast<std::size_t>(i - 1)],
              ds.source_t[static_cast<std::size_t>(j)]);
  }
  return ds;
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  bool last_us = false;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      last_us = false;
    } else if (!last_us && !out.empty()) {
      out += '_';
      last_us = true;
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

void write_store(const std::string& dir, const std::vector<PatientSeries>& series,
                 const schema::Schema& s, const Transforms& transforms,
                 const std::map<std::string, Split>& splits) {
  fs::create_directories(fs::path(dir) / "store");
  {
    std::ofstream out(fs::path(dir) / "store" / "schema.txt");
    out << s.export_text();
  }
  const auto temporal = s.temporal_indices();
  const auto statics = s.static_indices();
  std::ostringstream manifest;
  manifest << "schema_version = " << s.version() << "\n";
  manifest << "schema_hash = " << s.hash() << "\n";
  manifest << "patients = " << series.size() << "\n";
  for (std::size_t var = 0; var < s.size(); ++var) {
    const auto& spec = s.at(var);
    const std::string file = sanitize_name(spec.name) + ".csv";
    CsvWriter out((fs::path(dir) / "store" / file).string(),
                  {"patient_id", "time_index", "value"});
    std::size_t rows = 0;
    for (const auto& p : series) {
      if (spec.temporal) {
        const auto it = std::find(temporal.begin(), temporal.end(), static_cast<int>(var));
        const std::size_t slot = static_cast<std::size_t>(it - temporal.begin());
        for (int t = 0; t < kTimePoints; ++t) {
          const auto& v = p.frames[static_cast<std::size_t>(t)][slot];
          if (!v.has_value()) continue;
          out.row({p.patient_id, std::to_string(t), schema::canonical_to_string(*v)});
          ++rows;
        }
      } else {
        const auto it = std::find(statics.begin(), statics.end(), static_cast<int>(var));
        const auto& v = p.statics[static_cast<std::size_t>(it - statics.begin())];
        if (!v.has_value()) continue;
        out.row({p.patient_id, "-1", schema::canonical_to_string(*v)});
        ++rows;
      }
    }
    manifest << "rows." << sanitize_name(spec.name) << " = " << rows << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "store" / "manifest");
    out << manifest.str();
  }
  {
    CsvWriter out((fs::path(dir) / "splits.csv").string(), {"patient_id", "split"});
    for (const auto& [id, split] : splits) out.row({id, split_name(split)});
  }
  {
    CsvWriter out((fs::path(dir) / "transforms.csv").string(),
                  {"variable", "mean_log", "std_log"});
    for (std::size_t var = 0; var < s.size(); ++var) {
      const auto& t = transforms.by_var[var];
      if (!t.has_value()) continue;
      out.row({s.at(var).name, fmt_double(t->mean_log), fmt_double(t->std_log)});
    }
  }
}

Store read_store(const std::string& dir) {
  Store store;
  {
    std::ifstream in(fs::path(dir) / "store" / "schema.txt");
    if (!in) fail("MissingInput", dir + ": missing store/schema.txt");
    std::ostringstream buf;
    buf << in.rdbuf();
    store.schema = schema::Schema::import_text(buf.str());
  }
  const auto& s = store.schema;
  const auto temporal = s.temporal_indices();
  const auto statics = s.static_indices();
  std::unordered_map<std::string, std::size_t> series_index;

  auto series_for = [&](const std::string& id) -> PatientSeries& {
    auto it = series_index.find(id);
    if (it == series_index.end()) {
      PatientSeries p;
      p.patient_id = id;
      p.frames.assign(kTimePoints,
                      std::vector<std::optional<schema::CanonicalValue>>(temporal.size()));
      p.statics.resize(statics.size());
      series_index.emplace(id, store.series.size());
      store.series.push_back(std::move(p));
      return store.series.back();
    }
    return store.series[it->second];
  };

  for (std::size_t var = 0; var < s.size(); ++var) {
    const auto& spec = s.at(var);
    const std::string path =
        (fs::path(dir) / "store" / (sanitize_name(spec.name) + ".csv")).string();
    CsvTable table = read_csv(path);
    for (auto& row : table.rows) {
      auto& p = series_for(row[0]);
      const int t = std::atoi(row[1].c_str());
      schema::CanonicalValue v = spec.kind.tag == schema::VariableKind::Tag::categorical
                                     ? schema::CanonicalValue{row[2]}
                                     : schema::CanonicalValue{std::strtod(row[2].c_str(), nullptr)};
      if (spec.temporal) {
        const auto it = std::find(temporal.begin(), temporal.end(), static_cast<int>(var));
        p.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(it - temporal.begin())] = v;
      } else {
        const auto it = std::find(statics.begin(), statics.end(), static_cast<int>(var));
        p.statics[static_cast<std::size_t>(it - statics.begin())] = v;
      }
    }
  }
  std::sort(store.series.begin(), store.series.end(),
            [](const PatientSeries& a, const PatientSeries& b) { return a.patient_id < b.patient_id; });

  store.transforms.by_var.resize(s.size());
  {
    CsvTable table = read_csv((fs::path(dir) / "transforms.csv").string());
    for (auto& row : table.rows) {
      const int var = s.find(row[0]);
      if (var < 0) fail("UnknownVariable", row[0]);
      store.transforms.by_var[static_cast<std::size_t>(var)] = schema::TransformState{
          std::strtod(row[1].c_str(), nullptr), std::strtod(row[2].c_str(), nullptr)};
    }
  }
  {
    CsvTable table = read_csv((fs::path(dir) / "splits.csv").string());
    for (auto& row : table.rows) store.splits[row[0]] = split_from_name(row[1]);
  }
  return store;
}

std::vector<const PatientSeries*> Store::split_series(Split split) const {
  std::vector<const PatientSeries*> out;
  for (const auto& p : series) {
    auto it = splits.find(p.patient_id);
    if (it != splits.end() && it->second == split) out.push_back(&p);
  }
  return out;
}

std::set<std::string> Store::split_ids(Split split) const {
  std::set<std::string> out;
  for (const auto& [id, sp] : splits)
    if (sp == split) out.insert(id);
  return out;
}

}  // namespace trajsim::pipeline
