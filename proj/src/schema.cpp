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

#include "trajsim/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "trajsim/util/errors.hpp"
#include "trajsim/util/hash.hpp"

namespace trajsim::schema {

std::string category_name(Category c) {
  switch (c) {
    case Category::adas: return "ADAS";
    case Category::mmse: return "MMSE";
    case Category::laboratory: return "Laboratory";
    case Category::clinical: return "Clinical";
    case Category::background: return "Background";
  }
  return "?";
}

Category category_from_name(const std::string& name) {
  if (name == "ADAS") return Category::adas;
  if (name == "MMSE") return Category::mmse;
  if (name == "Laboratory") return Category::laboratory;
  if (name == "Clinical") return Category::clinical;
  if (name == "Background") return Category::background;
  fail("ConfigInvalid", "unknown category: " + name);
}

VariableKind VariableKind::continuous() {
  VariableKind k;
  k.tag = Tag::continuous_positive;
  return k;
}

VariableKind VariableKind::binary(std::string one, std::string zero) {
  VariableKind k;
  k.tag = Tag::binary;
  k.one_label = std::move(one);
  k.zero_label = std::move(zero);
  return k;
}

VariableKind VariableKind::ordinal(int min, int max) {
  if (min >= max) fail("OutOfRange", "ordinal needs min < max");
  VariableKind k;
  k.tag = Tag::ordinal;
  k.ord_min = min;
  k.ord_max = max;
  return k;
}

VariableKind VariableKind::categorical(std::vector<std::string> labels) {
  if (labels.size() < 2) fail("OutOfRange", "categorical needs >= 2 labels");
  VariableKind k;
  k.tag = Tag::categorical;
  k.labels = std::move(labels);
  return k;
}

int VariableKind::encoded_width() const {
  switch (tag) {
    case Tag::continuous_positive:
    case Tag::binary: return 1;
    case Tag::ordinal: return ord_max - ord_min + 1;
    case Tag::categorical: return static_cast<int>(labels.size());
  }
  return 0;
}

namespace {

VariableSpec var(std::string name, Category cat, VariableKind kind, bool temporal,
                 std::string unit) {
  VariableSpec s;
  s.name = std::move(name);
  s.category = cat;
  s.kind = std::move(kind);
  s.temporal = temporal;
  s.unit = std::move(unit);
  return s;
}

const std::vector<std::string> kRegionLabels = {
    "north_america", "south_america", "western_europe", "eastern_europe",
    "middle_east",   "asia_pacific",  "africa"};

const std::vector<std::string> kRaceLabels = {
    "white", "black_or_african_american", "asian", "american_indian_or_alaska_native",
    "native_hawaiian_or_pacific_islander", "other"};

}  // namespace

Schema Schema::builtin() {
  using K = VariableKind;
  Schema s;
  s.version_ = "camd44.v1";
  auto& v = s.vars_;
  v.reserve(44);
  // Cognitive: ADAS components.
  v.push_back(var("ADAS Commands", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Comprehension", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Construction", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Delayed Word Recall", Category::adas, K::ordinal(0, 10), true, "counts"));
  v.push_back(var("ADAS Ideational", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Instructions", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Naming", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Orientation", Category::adas, K::ordinal(0, 8), true, "counts"));
  v.push_back(var("ADAS Spoken Language", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Word Finding", Category::adas, K::ordinal(0, 5), true, "counts"));
  v.push_back(var("ADAS Word Recall", Category::adas, K::ordinal(0, 10), true, "counts"));
  v.push_back(var("ADAS Word Recognition", Category::adas, K::ordinal(0, 12), true, "counts"));
  // Cognitive: MMSE components.
  v.push_back(var("MMSE Attention and Calculation", Category::mmse, K::ordinal(0, 5), true,
                  "counts"));
  v.push_back(var("MMSE Language", Category::mmse, K::ordinal(0, 9), true, "counts"));
  v.push_back(var("MMSE Orientation", Category::mmse, K::ordinal(0, 10), true, "counts"));
  v.push_back(var("MMSE Recall", Category::mmse, K::ordinal(0, 3), true, "counts"));
  v.push_back(var("MMSE Registration", Category::mmse, K::ordinal(0, 3), true, "counts"));
  // Laboratory tests (log-standardized for training).
  v.push_back(var("Alanine aminotransferase", Category::laboratory, K::continuous(), true,
                  "ukat/l"));
  v.push_back(var("Alkaline phosphatase", Category::laboratory, K::continuous(), true, "ukat/l"));
  v.push_back(var("Aspartate aminotransferase", Category::laboratory, K::continuous(), true,
                  "ukat/l"));
  v.push_back(var("Cholesterol", Category::laboratory, K::continuous(), true, "mmol/l"));
  v.push_back(var("Creatine kinase", Category::laboratory, K::continuous(), true, "iu/cl"));
  v.push_back(var("Creatinine", Category::laboratory, K::continuous(), true, "mg/dl"));
  v.push_back(var("Gamma glutamyl transferase", Category::laboratory, K::continuous(), true,
                  "iu/dl"));
  v.push_back(var("Hematocrit", Category::laboratory, K::continuous(), true, "counts"));
  v.push_back(var("Hemoglobin", Category::laboratory, K::continuous(), true, "g/dl"));
  v.push_back(var("Hemoglobin a1c", Category::laboratory, K::continuous(), true, "%"));
  v.push_back(var("Indirect bilirubin", Category::laboratory, K::continuous(), true, "mg/dl"));
  v.push_back(var("Potassium", Category::laboratory, K::continuous(), true, "mmol/l"));
  v.push_back(var("Sodium", Category::laboratory, K::continuous(), true, "mmol/cl"));
  v.push_back(var("Triglycerides", Category::laboratory, K::continuous(), true, "g/l"));
  // Clinical.
  v.push_back(var("Blood pressure (diastolic)", Category::clinical, K::continuous(), true,
                  "mmHg"));
  v.push_back(var("Blood pressure (systolic)", Category::clinical, K::continuous(), true,
                  "mmHg"));
  v.push_back(var("Heart rate", Category::clinical, K::continuous(), true, "bpm"));
  v.push_back(var("Weight", Category::clinical, K::continuous(), true, "kg"));
  v.push_back(var("Dropout", Category::clinical, K::binary(), true,
                  "1 for dropout before the next time"));
  // Background (static).
  v.push_back(var("Age at baseline", Category::background, K::continuous(), false, "years"));
  v.push_back(var("Geographic region", Category::background, K::categorical(kRegionLabels),
                  false, "-"));
  v.push_back(var("Initial diagnosis (AD or MCI)", Category::background,
                  K::binary("AD", "MCI"), false, "1 if AD"));
  v.push_back(var("Past cardiovascular event", Category::background, K::binary("yes", "no"),
                  false, "1 if past event"));
  v.push_back(var("ApoE e4 allele count", Category::background, K::ordinal(0, 2), false,
                  "counts"));
  v.push_back(var("Race", Category::background, K::categorical(kRaceLabels), false, "-"));
  v.push_back(var("Sex", Category::background, K::binary("female", "male"), false,
                  "1 if female"));
  v.push_back(var("Height", Category::background, K::continuous(), false, "cm"));
  return s;
}

int Schema::find(const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].name == name) return static_cast<int>(i);
  return -1;
}

const VariableSpec& Schema::lookup(const std::string& name) const {
  int i = find(name);
  if (i < 0) fail("UnknownVariable", name);
  return vars_[i];
}

std::vector<int> Schema::temporal_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].temporal) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Schema::static_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (!vars_[i].temporal) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Schema::forecastable_indices() const {
  std::vector<int> out;
  const int dropout = dropout_index();
  for (int i : temporal_indices())
    if (i != dropout) out.push_back(i);
  return out;
}

int Schema::dropout_index() const { return find("Dropout"); }

std::uint64_t Schema::hash() const { return fnv1a64(export_text()); }

namespace {
std::string kind_text(const VariableKind& k) {
  std::ostringstream out;
  switch (k.tag) {
    case VariableKind::Tag::continuous_positive:
      out << "continuous_positive";
      break;
    case VariableKind::Tag::binary:
      out << "binary";
      if (!k.one_label.empty()) out << "[" << k.one_label << "|" << k.zero_label << "]";
      break;
    case VariableKind::Tag::ordinal:
      out << "ordinal[" << k.ord_min << ".." << k.ord_max << "]";
      break;
    case VariableKind::Tag::categorical: {
      out << "categorical[";
      for (std::size_t i = 0; i < k.labels.size(); ++i) {
        if (i) out << "|";
        out << k.labels[i];
      }
      out << "]";
      break;
    }
  }
  return out.str();
}

VariableKind kind_from_text(const std::string& text) {
  auto bracket = text.find('[');
  std::string head = text.substr(0, bracket);
  std::string body =
      bracket == std::string::npos ? "" : text.substr(bracket + 1, text.rfind(']') - bracket - 1);
  auto split_bar = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      auto pos = s.find('|', start);
      if (pos == std::string::npos) {
        parts.push_back(s.substr(start));
        return parts;
      }
      parts.push_back(s.substr(start, pos - start));
      start = pos + 1;
    }
  };
  if (head == "continuous_positive") return VariableKind::continuous();
  if (head == "binary") {
    if (body.empty()) return VariableKind::binary();
    auto parts = split_bar(body);
    if (parts.size() != 2) fail("ConfigInvalid", "binary kind: " + text);
    return VariableKind::binary(parts[0], parts[1]);
  }
  if (head == "ordinal") {
    auto dots = body.find("..");
    if (dots == std::string::npos) fail("ConfigInvalid", "ordinal kind: " + text);
    return VariableKind::ordinal(std::atoi(body.substr(0, dots).c_str()),
                                 std::atoi(body.substr(dots + 2).c_str()));
  }
  if (head == "categorical") return VariableKind::categorical(split_bar(body));
  fail("ConfigInvalid", "unknown kind: " + text);
}
}  // namespace

std::string Schema::export_text() const {
  std::ostringstream out;
  out << "schema " << version_ << "\n";
  for (const auto& v : vars_) {
    out << "var: " << v.name << "; category: " << category_name(v.category)
        << "; kind: " << kind_text(v.kind) << "; temporal: " << (v.temporal ? "yes" : "no")
        << "; unit: " << v.unit << "\n";
  }
  return out.str();
}

Schema Schema::import_text(const std::string& text) {
  Schema s;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("schema ", 0) != 0)
    fail("ConfigInvalid", "schema text: missing version line");
  s.version_ = line.substr(7);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("var: ", 0) != 0) fail("ConfigInvalid", "schema text: " + line);
    std::vector<std::string> fields;
    std::size_t start = 0;
    std::string rest = line;
    for (;;) {
      auto pos = rest.find("; ", start);
      if (pos == std::string::npos) {
        fields.push_back(rest.substr(start));
        break;
      }
      fields.push_back(rest.substr(start, pos - start));
      start = pos + 2;
    }
    auto value_of = [&](const char* key) -> std::string {
      std::string prefix = std::string(key) + ": ";
      for (auto& f : fields)
        if (f.rfind(prefix, 0) == 0) return f.substr(prefix.size());
      fail("ConfigInvalid", "schema text: missing field " + std::string(key));
    };
    VariableSpec v;
    v.name = value_of("var");
    v.category = category_from_name(value_of("category"));
    v.kind = kind_from_text(value_of("kind"));
    v.temporal = value_of("temporal") == "yes";
    v.unit = value_of("unit");
    s.vars_.push_back(std::move(v));
  }
  return s;
}

TransformState fit_transform(std::span<const double> values) {
  if (values.empty()) fail("EmptyDataset", "fit_transform: no values");
  double sum = 0.0;
  for (double v : values) {
    if (v <= 0.0) fail("NonPositiveValue", "fit_transform: value <= 0");
    sum += std::log(v);
  }
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) {
    const double d = std::log(v) - mean;
    ss += d * d;
  }
  double sd = std::sqrt(ss / static_cast<double>(values.size()));
  if (sd < 1e-12) sd = 1.0;  // constant input
  return TransformState{mean, sd};
}

Encoded encode_value(const std::optional<CanonicalValue>& value, const VariableSpec& spec,
                     const TransformState* transform) {
  Encoded e;
  e.values.assign(static_cast<std::size_t>(spec.kind.encoded_width()), 0.0);
  if (!value.has_value()) return e;
  e.present = true;
  switch (spec.kind.tag) {
    case VariableKind::Tag::continuous_positive: {
      const double v = std::get<double>(*value);
      if (v <= 0.0) fail("NonPositiveValue", spec.name + ": " + std::to_string(v));
      const TransformState id{};
      const TransformState& t = transform ? *transform : id;
      e.values[0] = (std::log(v) - t.mean_log) / t.std_log;
      break;
    }
    case VariableKind::Tag::binary: {
      const double v = std::get<double>(*value);
      if (v != 0.0 && v != 1.0) fail("OutOfRange", spec.name + ": binary value not 0/1");
      e.values[0] = v;
      break;
    }
    case VariableKind::Tag::ordinal: {
      const double v = std::get<double>(*value);
      const double r = std::round(v);
      if (std::fabs(v - r) > 1e-9 || r < spec.kind.ord_min || r > spec.kind.ord_max)
        fail("OutOfRange", spec.name + ": ordinal value " + std::to_string(v));
      e.values[static_cast<std::size_t>(r) - static_cast<std::size_t>(spec.kind.ord_min)] = 1.0;
      break;
    }
    case VariableKind::Tag::categorical: {
      const std::string& label = std::get<std::string>(*value);
      auto it = std::find(spec.kind.labels.begin(), spec.kind.labels.end(), label);
      if (it == spec.kind.labels.end()) fail("UnknownLabel", spec.name + ": " + label);
      e.values[static_cast<std::size_t>(it - spec.kind.labels.begin())] = 1.0;
      break;
    }
  }
  return e;
}

CanonicalValue decode_value(std::span<const double> block, const VariableSpec& spec,
                            const TransformState* transform) {
  if (static_cast<int>(block.size()) != spec.kind.encoded_width())
    fail("DimensionMismatch", spec.name + ": decode width");
  switch (spec.kind.tag) {
    case VariableKind::Tag::continuous_positive: {
      const TransformState id{};
      const TransformState& t = transform ? *transform : id;
      return std::exp(t.std_log * block[0] + t.mean_log);
    }
    case VariableKind::Tag::binary:
      return block[0] > 0.5 ? 1.0 : 0.0;
    case VariableKind::Tag::ordinal: {
      const auto arg = std::max_element(block.begin(), block.end()) - block.begin();
      return static_cast<double>(spec.kind.ord_min + arg);
    }
    case VariableKind::Tag::categorical: {
      const auto arg = std::max_element(block.begin(), block.end()) - block.begin();
      return spec.kind.labels[static_cast<std::size_t>(arg)];
    }
  }
  fail("OutOfRange", "unreachable");
}

CanonicalValue parse_raw(const std::string& text, const VariableSpec& spec) {
  switch (spec.kind.tag) {
    case VariableKind::Tag::categorical: {
      auto it = std::find(spec.kind.labels.begin(), spec.kind.labels.end(), text);
      if (it == spec.kind.labels.end()) fail("UnknownLabel", spec.name + ": " + text);
      return text;
    }
    case VariableKind::Tag::binary: {
      if (!spec.kind.one_label.empty() && text == spec.kind.one_label) return 1.0;
      if (!spec.kind.zero_label.empty() && text == spec.kind.zero_label) return 0.0;
      break;
    }
    case VariableKind::Tag::continuous_positive: {
      // Censored-above convention, e.g. age `>89` records as 90.
      if (!text.empty() && text[0] == '>') {
        char* end = nullptr;
        double v = std::strtod(text.c_str() + 1, &end);
        if (end != text.c_str() + 1 && *end == '\0') return v + 1.0;
      }
      break;
    }
    default:
      break;
  }
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    fail("OutOfRange", spec.name + ": cannot parse value `" + text + "`");
  return v;
}

double canonical_as_double(const CanonicalValue& value, const VariableSpec& spec) {
  if (std::holds_alternative<double>(value)) return std::get<double>(value);
  const std::string& label = std::get<std::string>(value);
  auto it = std::find(spec.kind.labels.begin(), spec.kind.labels.end(), label);
  if (it == spec.kind.labels.end()) fail("UnknownLabel", spec.name + ": " + label);
  return static_cast<double>(it - spec.kind.labels.begin());
}

std::string canonical_to_string(const CanonicalValue& value) {
  if (std::holds_alternative<std::string>(value)) return std::get<std::string>(value);
  const double v = std::get<double>(value);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace trajsim::schema
