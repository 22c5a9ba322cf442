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

#include <cmath>

#include <doctest.h>

#include "trajsim/schema.hpp"
#include "trajsim/util/errors.hpp"
#include "trajsim/util/rng.hpp"

using namespace trajsim;
using schema::Schema;
using schema::VariableKind;
using Tag = schema::VariableKind::Tag;

TEST_CASE("builtin schema shape") {
  const auto s = Schema::builtin();
  CHECK(s.size() == 44);
  CHECK(s.temporal_indices().size() == 36);  // dropout is temporal clinical
  CHECK(s.static_indices().size() == 8);
  CHECK(s.forecastable_indices().size() == 35);

  const auto& recog = s.lookup("ADAS Word Recognition");
  CHECK(recog.kind.tag == Tag::ordinal);
  CHECK(recog.kind.ord_min == 0);
  CHECK(recog.kind.ord_max == 12);
  CHECK(recog.temporal);

  const auto& sex = s.lookup("Sex");
  CHECK(sex.kind.tag == Tag::binary);
  CHECK_FALSE(sex.temporal);
  CHECK(sex.unit == "1 if female");

  CHECK(s.lookup("Geographic region").kind.labels.size() == 7);
  CHECK(s.lookup("Race").kind.labels.size() == 6);
  CHECK(s.lookup("ApoE e4 allele count").kind.encoded_width() == 3);
  CHECK_THROWS_AS(s.lookup("No Such Variable"), Error);

  // Widest one-hot block is the 0-12 ordinal.
  int widest = 0;
  for (const auto& v : s.variables()) widest = std::max(widest, v.kind.encoded_width());
  CHECK(widest == 13);
}

TEST_CASE("fit_transform on log values") {
  const double e = std::exp(1.0);
  SUBCASE("constant input falls back to unit scale") {
    const double vals[] = {e, e, e};
    const auto t = schema::fit_transform(vals);
    CHECK(t.mean_log == doctest::Approx(1.0));
    CHECK(t.std_log == doctest::Approx(1.0));
  }
  SUBCASE("population standard deviation") {
    const double vals[] = {1.0, e, e * e};
    const auto t = schema::fit_transform(vals);
    CHECK(t.mean_log == doctest::Approx(1.0));
    CHECK(t.std_log == doctest::Approx(std::sqrt(2.0 / 3.0)));
  }
  SUBCASE("single value") {
    const double vals[] = {1.0};
    const auto t = schema::fit_transform(vals);
    CHECK(t.mean_log == doctest::Approx(0.0));
    CHECK(t.std_log == doctest::Approx(1.0));
  }
  SUBCASE("nonpositive rejected") {
    const double vals[] = {1.0, 0.0};
    CHECK_THROWS_AS(schema::fit_transform(vals), Error);
  }
}

TEST_CASE("encode examples") {
  const auto s = Schema::builtin();
  const auto& sex = s.lookup("Sex");
  const auto female = schema::parse_raw("female", sex);
  const auto enc = schema::encode_value(female, sex, nullptr);
  REQUIRE(enc.values.size() == 1);
  CHECK(enc.values[0] == 1.0);
  CHECK(enc.present);

  const auto& age = s.lookup("Age at baseline");
  const auto censored = schema::parse_raw(">89", age);
  CHECK(std::get<double>(censored) == 90.0);

  const schema::TransformState t{1.0, 1.0};
  const auto& chol = s.lookup("Cholesterol");
  const auto centered = schema::encode_value(schema::CanonicalValue{std::exp(1.0)}, chol, &t);
  CHECK(centered.values[0] == doctest::Approx(0.0));

  const auto missing = schema::encode_value(std::nullopt, s.lookup("Race"), nullptr);
  CHECK_FALSE(missing.present);
  for (double v : missing.values) CHECK(v == 0.0);

  CHECK_THROWS_AS(
      schema::encode_value(schema::CanonicalValue{13.0}, s.lookup("ADAS Word Recognition"),
                           nullptr),
      Error);
  CHECK_THROWS_AS(
      schema::encode_value(schema::CanonicalValue{std::string("nowhere")},
                           s.lookup("Geographic region"), nullptr),
      Error);
}

TEST_CASE("decode examples") {
  const auto s = Schema::builtin();
  // Ordinal 0-8: round trip of level 7.
  const auto& orient = s.lookup("ADAS Orientation");
  const auto enc = schema::encode_value(schema::CanonicalValue{7.0}, orient, nullptr);
  CHECK(std::get<double>(schema::decode_value(enc.values, orient, nullptr)) == 7.0);

  const schema::TransformState t{1.0, 1.0};
  const double zero[] = {0.0};
  const auto& chol = s.lookup("Cholesterol");
  CHECK(std::get<double>(schema::decode_value(zero, chol, &t)) ==
        doctest::Approx(std::exp(1.0)));

  const auto& region = s.lookup("Geographic region");
  std::vector<double> onehot(7, 0.0);
  onehot[3] = 1.0;
  CHECK(std::get<std::string>(schema::decode_value(onehot, region, nullptr)) ==
        region.kind.labels[3]);
}

TEST_CASE("round trip over every variable") {
  const auto s = Schema::builtin();
  Rng rng(42);
  const schema::TransformState t{0.3, 1.7};
  for (const auto& spec : s.variables()) {
    for (int rep = 0; rep < 50; ++rep) {
      schema::CanonicalValue value{0.0};
      switch (spec.kind.tag) {
        case Tag::continuous_positive:
          value = std::exp(3.0 * (rng.uniform() - 0.5));
          break;
        case Tag::binary:
          value = rng.bernoulli(0.5) ? 1.0 : 0.0;
          break;
        case Tag::ordinal:
          value = static_cast<double>(
              spec.kind.ord_min +
              static_cast<int>(rng.below(
                  static_cast<std::uint64_t>(spec.kind.ord_max - spec.kind.ord_min + 1))));
          break;
        case Tag::categorical:
          value = spec.kind.labels[rng.below(spec.kind.labels.size())];
          break;
      }
      const auto* transform =
          spec.kind.tag == Tag::continuous_positive ? &t : nullptr;
      const auto enc = schema::encode_value(value, spec, transform);
      CHECK(enc.present);
      if (spec.kind.tag == Tag::ordinal || spec.kind.tag == Tag::categorical) {
        double sum = 0.0;
        for (double v : enc.values) sum += v;
        CHECK(sum == 1.0);
      }
      const auto back = schema::decode_value(enc.values, spec, transform);
      if (spec.kind.tag == Tag::continuous_positive) {
        CHECK(std::get<double>(back) ==
              doctest::Approx(std::get<double>(value)).epsilon(1e-9));
      } else if (spec.kind.tag == Tag::categorical) {
        CHECK(std::get<std::string>(back) == std::get<std::string>(value));
      } else {
        CHECK(std::get<double>(back) == std::get<double>(value));
      }
    }
  }
}

TEST_CASE("schema text export/import round trip") {
  const auto s = Schema::builtin();
  const auto text = s.export_text();
  const auto imported = Schema::import_text(text);
  CHECK(imported.export_text() == text);
  CHECK(imported.hash() == s.hash());
  CHECK(imported.version() == s.version());
  CHECK(imported.lookup("Initial diagnosis (AD or MCI)").kind.one_label == "AD");
}
