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

#include <algorithm>
#include <filesystem>
#include <set>

#include <doctest.h>

#include "trajsim/pipeline.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/rng.hpp"

using namespace trajsim;
using pipeline::RawEvent;

namespace {

const schema::Schema& S() {
  static const auto s = schema::Schema::builtin();
  return s;
}

int temporal_slot(const std::string& name) {
  const auto temporal = S().temporal_indices();
  const int var = S().find(name);
  return static_cast<int>(std::find(temporal.begin(), temporal.end(), var) - temporal.begin());
}

// A patient whose 11 scored ADAS components are present at every listed
// time point (events at the window centers).
std::vector<RawEvent> full_adas_events(const std::string& pid, std::initializer_list<int> times) {
  std::vector<RawEvent> events;
  for (const auto& spec : S().variables()) {
    if (spec.category != schema::Category::adas || spec.name == "ADAS Delayed Word Recall")
      continue;
    for (int t : times) events.push_back({pid, spec.name, 90L * t, "1"});
  }
  return events;
}

}  // namespace

TEST_CASE("window assignment with midpoint tie break") {
  CHECK(pipeline::window_index(0) == 0);
  CHECK(pipeline::window_index(85) == 1);
  CHECK(pipeline::window_index(95) == 1);
  CHECK(pipeline::window_index(45) == 0);    // midpoint goes to the earlier window
  CHECK(pipeline::window_index(46) == 1);
  CHECK(pipeline::window_index(135) == 1);
  CHECK(pipeline::window_index(136) == 2);
  CHECK(pipeline::window_index(-45) == 0);   // screening folds into baseline
  CHECK(pipeline::window_index(-46) == -1);  // earlier screening discarded
  CHECK(pipeline::window_index(540) == 6);
  CHECK(pipeline::window_index(585) == 6);
  CHECK(pipeline::window_index(586) == -1);
}

TEST_CASE("bucketing averages events inside a window") {
  std::vector<RawEvent> events = {
      {"p1", "Cholesterol", 85, "5"},
      {"p1", "Cholesterol", 95, "7"},
      {"p1", "Heart rate", 300, "66"},
  };
  const auto series = pipeline::bucket_events(events, S());
  REQUIRE(series.size() == 1);
  const int chol = temporal_slot("Cholesterol");
  CHECK(std::get<double>(*series[0].frames[1][chol]) == doctest::Approx(6.0));
  CHECK_FALSE(series[0].frames[0][chol].has_value());  // empty window stays masked
  const int hr = temporal_slot("Heart rate");
  CHECK(std::get<double>(*series[0].frames[3][hr]) == doctest::Approx(66.0));
}

TEST_CASE("bucketing covers the seven windows and rejects unknown variables") {
  std::vector<RawEvent> events;
  for (int t = 0; t < 7; ++t) events.push_back({"p1", "Weight", 90L * t, "70"});
  const auto series = pipeline::bucket_events(events, S());
  const int w = temporal_slot("Weight");
  for (int t = 0; t < 7; ++t) CHECK(series[0].frames[t][w].has_value());

  std::vector<RawEvent> bad = {{"p1", "Blood Sugar", 0, "1"}};
  CHECK_THROWS_AS(pipeline::bucket_events(bad, S()), Error);
}

TEST_CASE("bucketing is permutation invariant") {
  std::vector<RawEvent> events = {
      {"p2", "Weight", 10, "70"},   {"p1", "Cholesterol", 85, "5"}, {"p1", "Weight", 170, "71"},
      {"p1", "Cholesterol", 95, "7"}, {"p2", "Sex", 0, "female"},
  };
  auto a = pipeline::bucket_events(events, S());
  std::reverse(events.begin(), events.end());
  auto b = pipeline::bucket_events(events, S());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].patient_id == b[i].patient_id);
    for (int t = 0; t < pipeline::kTimePoints; ++t)
      for (std::size_t k = 0; k < a[i].frames[t].size(); ++k) {
        CHECK(a[i].frames[t][k].has_value() == b[i].frames[t][k].has_value());
        if (a[i].frames[t][k].has_value())
          CHECK(schema::canonical_to_string(*a[i].frames[t][k]) ==
                schema::canonical_to_string(*b[i].frames[t][k]));
      }
  }
}

TEST_CASE("static aggregation: numeric mean, categorical mode") {
  std::vector<RawEvent> events = {
      {"p1", "Height", 0, "170"},
      {"p1", "Height", 10, "172"},
      {"p1", "Race", 0, "white"},
      {"p1", "Race", 5, "asian"},
      {"p1", "Race", 9, "white"},
      {"p1", "ApoE e4 allele count", 0, "1"},
      {"p1", "ApoE e4 allele count", 3, "2"},
  };
  const auto series = pipeline::bucket_events(events, S());
  const auto statics = S().static_indices();
  auto slot = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(statics.begin(), statics.end(), S().find(name)) -
                                    statics.begin());
  };
  CHECK(std::get<double>(*series[0].statics[slot("Height")]) == doctest::Approx(171.0));
  CHECK(std::get<std::string>(*series[0].statics[slot("Race")]) == "white");
  CHECK(std::get<double>(*series[0].statics[slot("ApoE e4 allele count")]) == 2.0);  // mean 1.5 rounds up
}

TEST_CASE("dropout flag from disposition") {
  // Data at t=0 and t=1, dropout event in (90, 180].
  auto events = full_adas_events("p1", {0, 1});
  events.push_back({"p1", "Dropout", 100, "1"});
  const auto series = pipeline::bucket_events(events, S());
  const int d = temporal_slot("Dropout");
  CHECK(std::get<double>(*series[0].frames[0][d]) == 0.0);
  CHECK(std::get<double>(*series[0].frames[1][d]) == 1.0);
  for (int t = 2; t < 7; ++t)
    for (const auto& v : series[0].frames[t]) CHECK_FALSE(v.has_value());  // fully masked

  // Without a disposition event the trailing flags stay unknown.
  const auto series2 = pipeline::bucket_events(full_adas_events("p2", {0, 1, 2}), S());
  CHECK(std::get<double>(*series2[0].frames[0][d]) == 0.0);
  CHECK(std::get<double>(*series2[0].frames[1][d]) == 0.0);
  CHECK_FALSE(series2[0].frames[2][d].has_value());
  CHECK_FALSE(series2[0].frames[6][d].has_value());

  // Observed data after the event wins: the disposition is ignored.
  auto events3 = full_adas_events("p3", {0, 5});
  events3.push_back({"p3", "Dropout", 100, "1"});
  const auto series3 = pipeline::bucket_events(events3, S());
  CHECK(std::get<double>(*series3[0].frames[1][d]) == 0.0);
  CHECK(series3[0].frames[5][temporal_slot("ADAS Commands")].has_value());
}

TEST_CASE("patient selection needs a complete ADAS at month 15 or 18") {
  std::vector<RawEvent> events = full_adas_events("kept_t6", {6});
  auto more = full_adas_events("kept_t5", {5});
  events.insert(events.end(), more.begin(), more.end());
  // 10 of 11 components at both late points.
  auto partial = full_adas_events("dropped", {5, 6});
  partial.erase(std::remove_if(partial.begin(), partial.end(),
                               [](const RawEvent& e) { return e.variable == "ADAS Commands"; }),
                partial.end());
  events.insert(events.end(), partial.begin(), partial.end());
  auto early = full_adas_events("dropped_early", {0, 1, 2});
  events.insert(events.end(), early.begin(), early.end());

  const auto series = pipeline::bucket_events(events, S());
  const auto kept = pipeline::select_patients(series, S());
  CHECK(std::set<std::string>(kept.begin(), kept.end()) ==
        std::set<std::string>{"kept_t5", "kept_t6"});
}

TEST_CASE("split counts and determinism") {
  std::vector<std::string> ids;
  for (int i = 0; i < 1908; ++i) ids.push_back("p" + std::to_string(i));
  const auto splits = pipeline::split_patients(ids, 11);
  int train = 0, val = 0, test = 0;
  for (const auto& [id, sp] : splits) {
    if (sp == pipeline::Split::train) ++train;
    if (sp == pipeline::Split::validation) ++val;
    if (sp == pipeline::Split::test) ++test;
  }
  CHECK(train == 1335);
  CHECK(val == 95);
  CHECK(test == 478);
  CHECK(train + val + test == 1908);

  ids.resize(100);
  const auto hundred = pipeline::split_patients(ids, 3);
  int t100 = 0, v100 = 0, s100 = 0;
  for (const auto& [id, sp] : hundred) {
    t100 += sp == pipeline::Split::train;
    v100 += sp == pipeline::Split::validation;
    s100 += sp == pipeline::Split::test;
  }
  CHECK(t100 == 70);
  CHECK(v100 == 5);
  CHECK(s100 == 25);

  CHECK(pipeline::split_patients(ids, 3) == hundred);          // same seed
  CHECK(pipeline::split_patients(ids, 4) != hundred);          // different seed
  CHECK_THROWS_AS(pipeline::split_patients({}, 0), Error);
}

TEST_CASE("transforms are fitted from the training split only") {
  std::vector<RawEvent> events = {
      {"train1", "Cholesterol", 0, "1"},
      {"train1", "Cholesterol", 90, "1"},
      {"test1", "Cholesterol", 0, "1000"},
  };
  const auto series = pipeline::bucket_events(events, S());
  const auto transforms = pipeline::fit_transforms(series, {"train1"}, S());
  const auto* t = transforms.get(S().find("Cholesterol"));
  REQUIRE(t != nullptr);
  CHECK(t->mean_log == doctest::Approx(0.0));  // test1's extreme value not seen
  CHECK(t->std_log == doctest::Approx(1.0));
}

TEST_CASE("make_pairs emits six adjacent pairs per patient") {
  std::vector<RawEvent> events;
  for (const std::string pid : {"a", "b", "c"}) {
    auto e = full_adas_events(pid, {0, 1, 2, 3, 4, 5, 6});
    events.insert(events.end(), e.begin(), e.end());
    events.push_back({pid, "Sex", 0, pid == "a" ? "female" : "male"});
  }
  const auto series = pipeline::bucket_events(events, S());
  const auto transforms = pipeline::fit_transforms(series, {"a", "b", "c"}, S());
  const auto ds = pipeline::make_pairs(series, {"a", "b", "c"}, S(), transforms, 5);

  CHECK(ds.n() == 18);  // 3 patients x 6 pairs
  CHECK(ds.layout.total_width == 2 * ds.layout.width_temporal + ds.layout.width_static);

  // Static block identical across one patient's samples; every t appears once.
  std::map<std::string, std::set<int>> ts;
  std::map<std::string, VectorXd> statics;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const auto& pid = ds.patient_ids[static_cast<std::size_t>(i)];
    ts[pid].insert(ds.source_t[static_cast<std::size_t>(i)]);
    VectorXd stat = ds.v.row(i).head(ds.layout.width_static).transpose();
    auto it = statics.find(pid);
    if (it == statics.end())
      statics[pid] = stat;
    else
      CHECK((it->second - stat).norm() == 0.0);
  }
  for (const auto& [pid, seen] : ts) CHECK(seen == std::set<int>{0, 1, 2, 3, 4, 5});

  // Same seed reproduces the shuffle; the shuffle actually mixes.
  const auto ds2 = pipeline::make_pairs(series, {"a", "b", "c"}, S(), transforms, 5);
  CHECK(ds.patient_ids == ds2.patient_ids);
  CHECK((ds.v - ds2.v).norm() == 0.0);
}

TEST_CASE("split leakage: datasets for two splits share no patients") {
  std::vector<RawEvent> events;
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) {
    const std::string pid = "p" + std::to_string(i);
    ids.push_back(pid);
    auto e = full_adas_events(pid, {0, 1, 2, 3, 4, 5, 6});
    events.insert(events.end(), e.begin(), e.end());
  }
  const auto series = pipeline::bucket_events(events, S());
  const auto splits = pipeline::split_patients(ids, 7);
  std::set<std::string> train_ids, test_ids;
  for (const auto& [id, sp] : splits) {
    if (sp == pipeline::Split::train) train_ids.insert(id);
    if (sp == pipeline::Split::test) test_ids.insert(id);
  }
  const auto transforms = pipeline::fit_transforms(series, train_ids, S());
  const auto train_ds = pipeline::make_pairs(series, train_ids, S(), transforms, 1);
  const auto test_ds = pipeline::make_pairs(series, test_ids, S(), transforms, 1);
  std::set<std::string> seen_train(train_ds.patient_ids.begin(), train_ds.patient_ids.end());
  for (const auto& pid : test_ds.patient_ids) CHECK_FALSE(seen_train.count(pid));
}

TEST_CASE("store round trip") {
  std::vector<RawEvent> events = full_adas_events("p1", {0, 5});
  events.push_back({"p1", "Cholesterol", 0, "5.2"});
  events.push_back({"p1", "Sex", 0, "female"});
  events.push_back({"p1", "Race", 0, "asian"});
  auto e2 = full_adas_events("p2", {0, 6});
  events.insert(events.end(), e2.begin(), e2.end());

  const auto series = pipeline::bucket_events(events, S());
  const auto transforms = pipeline::fit_transforms(series, {"p1"}, S());
  const std::map<std::string, pipeline::Split> splits = {
      {"p1", pipeline::Split::train}, {"p2", pipeline::Split::test}};

  const std::string dir = "/tmp/trajsim_test_store";
  std::filesystem::remove_all(dir);
  pipeline::write_store(dir, series, S(), transforms, splits);
  const auto store = pipeline::read_store(dir);

  CHECK(store.schema.hash() == S().hash());
  REQUIRE(store.series.size() == 2);
  CHECK(store.splits.at("p2") == pipeline::Split::test);
  const int chol = temporal_slot("Cholesterol");
  CHECK(std::get<double>(*store.series[0].frames[0][chol]) == doctest::Approx(5.2));
  const auto statics = S().static_indices();
  const auto race_slot = static_cast<std::size_t>(
      std::find(statics.begin(), statics.end(), S().find("Race")) - statics.begin());
  CHECK(std::get<std::string>(*store.series[0].statics[race_slot]) == "asian");
  const auto* t = store.transforms.get(S().find("Cholesterol"));
  REQUIRE(t != nullptr);
  CHECK(t->mean_log == doctest::Approx(std::log(5.2)));
}
