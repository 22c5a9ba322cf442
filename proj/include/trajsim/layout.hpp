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

#ifndef TRAJSIM_LAYOUT_HPP
#define TRAJSIM_LAYOUT_HPP

#include <string>
#include <vector>

#include "trajsim/schema.hpp"

namespace trajsim::model {

enum class UnitType { continuous, binary, onehot };

enum class BlockGroup { statics, time_t, time_t1 };

struct Block {
  int var_index = -1;  // schema index
  std::string variable;
  UnitType type = UnitType::continuous;
  BlockGroup group = BlockGroup::statics;
  int offset = 0;  // first coordinate in the full visible vector
  int width = 1;
};

/// Coordinate layout of the visible vector: [static | time t | time t+1].
/// The two temporal groups have identical structure.
struct VisibleLayout {
  static VisibleLayout from_schema(const schema::Schema& s);

  std::vector<Block> blocks;
  int width_static = 0;
  int width_temporal = 0;  // one time point
  int total_width = 0;

  int group_start(BlockGroup g) const;
  int group_width(BlockGroup g) const { return g == BlockGroup::statics ? width_static : width_temporal; }

  /// Blocks of one group, in schema order.
  std::vector<const Block*> group_blocks(BlockGroup g) const;

  /// Offset of a temporal variable's block relative to its group start;
  /// identical for time_t and time_t1.
  int temporal_offset_in_group(int temporal_slot) const;
  int static_offset_in_group(int static_slot) const;
};

UnitType unit_type_for(const schema::VariableKind& kind);

}  // namespace trajsim::model

#endif  // TRAJSIM_LAYOUT_HPP
