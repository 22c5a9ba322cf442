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

#include "trajsim/util/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "trajsim/util/errors.hpp"

namespace trajsim {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", x);
  if (std::strtod(buf, nullptr) != x) std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}
}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("MissingInput", "cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) fail("MissingInput", "empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size())
      fail("MissingInput", path + ": row width " + std::to_string(fields.size()) +
                               " != header width " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), width_(header.size()) {
  if (!out_) fail("MissingInput", "cannot write " + path);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) fail("DimensionMismatch", "csv row width mismatch");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].find_first_of(",\n\r") != std::string::npos)
      fail("ConfigInvalid", "csv field contains separator: " + fields[i]);
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
}

void CsvWriter::close() { out_.close(); }

}  // namespace trajsim
