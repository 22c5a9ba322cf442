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

#ifndef TRAJSIM_UTIL_CONFIG_HPP
#define TRAJSIM_UTIL_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace trajsim {

/// Key/value run configuration.
///
/// Format: one `key = value` per line, `#` starts a comment, blank lines
/// ignored. Lists are comma separated. Keys are dotted lowercase
/// (e.g. `train.epochs = 200`).
class Config {
 public:
  Config() = default;
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Rejects keys outside the allowed set (ConfigInvalid).
  void validate(const std::vector<std::string>& allowed_keys) const;

  /// Canonical text (sorted keys); hashed into run manifests.
  std::string canonical_text() const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace trajsim

#endif  // TRAJSIM_UTIL_CONFIG_HPP
