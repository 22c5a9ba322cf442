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

#ifndef TRAJSIM_SCHEMA_HPP
#define TRAJSIM_SCHEMA_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace trajsim::schema {

enum class Category { adas, mmse, laboratory, clinical, background };

std::string category_name(Category c);
Category category_from_name(const std::string& name);

/// Unit type of one variable. Ordinal variables are one-hot encoded over
/// their integer range, so the model-side distinction from categorical is
/// only the canonical value type (integer level vs label).
struct VariableKind {
  enum class Tag { continuous_positive, binary, ordinal, categorical };

  Tag tag = Tag::continuous_positive;
  int ord_min = 0;
  int ord_max = 0;                   // ordinal only
  std::vector<std::string> labels;   // categorical only
  std::string one_label, zero_label; // binary parse aliases, may be empty

  static VariableKind continuous();
  static VariableKind binary(std::string one = "", std::string zero = "");
  static VariableKind ordinal(int min, int max);
  static VariableKind categorical(std::vector<std::string> labels);

  int encoded_width() const;
  bool discrete() const { return tag != Tag::continuous_positive; }
};

struct VariableSpec {
  std::string name;
  Category category = Category::background;
  VariableKind kind;
  bool temporal = false;
  std::string unit;
};

/// Log-standardization fitted on the training split only.
struct TransformState {
  double mean_log = 0.0;
  double std_log = 1.0;
};

/// Canonical (analysis-side) value: numeric for continuous/binary/ordinal,
/// label string for categorical.
using CanonicalValue = std::variant<double, std::string>;

class Schema {
 public:
  /// The fixed 44-variable table (12 ADAS + 5 MMSE + 14 laboratory +
  /// 5 clinical, all temporal; 8 static background).
  static Schema builtin();

  std::size_t size() const { return vars_.size(); }
  const VariableSpec& at(std::size_t i) const { return vars_[i]; }
  const std::vector<VariableSpec>& variables() const { return vars_; }

  int find(const std::string& name) const;  // -1 when absent
  const VariableSpec& lookup(const std::string& name) const;

  std::vector<int> temporal_indices() const;
  std::vector<int> static_indices() const;
  /// Temporal variables other than the dropout flag; the set the paper's
  /// per-variable forecasts cover.
  std::vector<int> forecastable_indices() const;
  int dropout_index() const;

  const std::string& version() const { return version_; }
  std::uint64_t hash() const;

  std::string export_text() const;
  static Schema import_text(const std::string& text);

 private:
  std::string version_;
  std::vector<VariableSpec> vars_;
};

/// mean/population-std of ln(values); std below 1e-12 falls back to 1.
TransformState fit_transform(std::span<const double> values);

struct Encoded {
  std::vector<double> values;
  bool present = false;
};

/// Encodes one canonical value (possibly missing) into its model-space
/// block. Missing values produce an all-zero block with present = false.
Encoded encode_value(const std::optional<CanonicalValue>& value, const VariableSpec& spec,
                     const TransformState* transform);

/// Exact inverse of encode_value on in-domain values.
CanonicalValue decode_value(std::span<const double> block, const VariableSpec& spec,
                            const TransformState* transform);

/// Parses a raw text field into a canonical value. Handles the `>89` age
/// convention (maps to 90) and per-variable binary label aliases.
CanonicalValue parse_raw(const std::string& text, const VariableSpec& spec);

/// Numeric view of a canonical value; categorical values map to their
/// label index.
double canonical_as_double(const CanonicalValue& value, const VariableSpec& spec);

std::string canonical_to_string(const CanonicalValue& value);

}  // namespace trajsim::schema

#endif  // TRAJSIM_SCHEMA_HPP
