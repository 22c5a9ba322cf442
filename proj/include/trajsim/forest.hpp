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

#ifndef TRAJSIM_FOREST_HPP
#define TRAJSIM_FOREST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "trajsim/types.hpp"

namespace trajsim::forest {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 8;
  int min_leaf = 5;
  double feature_fraction = 1.0;  // features considered per split
  bool classification = false;    // Gini on 0/1 labels vs variance reduction
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  VectorXd value;  // leaf mean (regression) or class-1 fraction (classification)
};

struct Tree {
  std::vector<TreeNode> nodes;
  int depth = 0;
  const VectorXd& predict(const double* x) const;
};

/// Bagged CART trees. Multi-output regression sums variance reduction
/// across output columns; classification leaves carry class fractions.
class Forest {
 public:
  void fit(const MatRX& x, const MatRX& y, const ForestConfig& cfg);

  VectorXd predict(const double* x) const;
  double predict_scalar(const double* x) const;
  VectorXd predict_scalar_batch(const MatRX& x) const;

  bool trained() const { return !trees_.empty(); }
  int max_tree_depth() const;
  const std::vector<Tree>& trees() const { return trees_; }
  const ForestConfig& config() const { return cfg_; }

 private:
  std::vector<Tree> trees_;
  ForestConfig cfg_;
  Eigen::Index n_outputs_ = 0;
};

}  // namespace trajsim::forest

#endif  // TRAJSIM_FOREST_HPP
