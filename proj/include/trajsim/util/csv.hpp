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

#ifndef TRAJSIM_UTIL_CSV_HPP
#define TRAJSIM_UTIL_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace trajsim {

/// Deterministic double formatting: shortest of %.15g / %.17g that parses
/// back exactly. Byte-stable across runs for identical values.
std::string fmt_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// Plain comma-separated values, no quoting (fields must not contain
/// commas or newlines; writers enforce this).
CsvTable read_csv(const std::string& path);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::ofstream out_;
  std::size_t width_;
};

}  // namespace trajsim

#endif  // TRAJSIM_UTIL_CSV_HPP
