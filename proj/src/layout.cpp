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

#include "trajsim/layout.hpp"

#include "trajsim/util/errors.hpp"

namespace trajsim::model {

UnitType unit_type_for(const schema::VariableKind& kind) {
  using Tag = schema::VariableKind::Tag;
  switch (kind.tag) {
    case Tag::continuous_positive: return UnitType::continuous;
    case Tag::binary: return UnitType::binary;
    case Tag::ordinal:
    case Tag::categorical: return UnitType::onehot;
  }
  return UnitType::continuous;
}

VisibleLayout VisibleLayout::from_schema(const schema::Schema& s) {
  VisibleLayout layout;
  int offset = 0;
  auto add_group = [&](BlockGroup group, const std::vector<int>& vars) {
    int width = 0;
    for (int idx : vars) {
      const auto& spec = s.at(static_cast<std::size_t>(idx));
      Block b;
      b.var_index = idx;
      b.variable = spec.name;
      b.type = unit_type_for(spec.kind);
      b.group = group;
      b.offset = offset;
      b.width = spec.kind.encoded_width();
      offset += b.width;
      width += b.width;
      layout.blocks.push_back(std::move(b));
    }
    return width;
  };
  layout.width_static = add_group(BlockGroup::statics, s.static_indices());
  layout.width_temporal = add_group(BlockGroup::time_t, s.temporal_indices());
  const int w1 = add_group(BlockGroup::time_t1, s.temporal_indices());
  if (w1 != layout.width_temporal) fail("DimensionMismatch", "layout: temporal group widths");
  layout.total_width = offset;
  return layout;
}

int VisibleLayout::group_start(BlockGroup g) const {
  switch (g) {
    case BlockGroup::statics: return 0;
    case BlockGroup::time_t: return width_static;
    case BlockGroup::time_t1: return width_static + width_temporal;
  }
  return 0;
}

std::vector<const Block*> VisibleLayout::group_blocks(BlockGroup g) const {
  std::vector<const Block*> out;
  for (const auto& b : blocks)
    if (b.group == g) out.push_back(&b);
  return out;
}

int VisibleLayout::temporal_offset_in_group(int temporal_slot) const {
  int slot = 0;
  for (const auto& b : blocks) {
    if (b.group != BlockGroup::time_t) continue;
    if (slot == temporal_slot) return b.offset - group_start(BlockGroup::time_t);
    ++slot;
  }
  fail("DimensionMismatch", "temporal slot out of range");
}

int VisibleLayout::static_offset_in_group(int static_slot) const {
  int slot = 0;
  for (const auto& b : blocks) {
    if (b.group != BlockGroup::statics) continue;
    if (slot == static_slot) return b.offset;
    ++slot;
  }
  fail("DimensionMismatch", "static slot out of range");
}

}  // namespace trajsim::model
