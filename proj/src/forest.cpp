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

#include "trajsim/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajsim/util/errors.hpp"
#include "trajsim/util/parallel.hpp"
#include "trajsim/util/rng.hpp"

namespace trajsim::forest {

namespace {

struct Builder {
  const MatRX& x;
  const MatRX& y;
  const ForestConfig& cfg;
  Tree& tree;
  Rng rng;
  std::vector<int> feature_pool;

  // Node split scratch: indices sorted per candidate feature.
  std::vector<int> sorted;

  int build(std::vector<int>& idx, int depth) {
    tree.depth = std::max(tree.depth, depth);
    const int n = static_cast<int>(idx.size());
    const Eigen::Index k = y.cols();

    VectorXd mean = VectorXd::Zero(k);
    for (int i : idx) mean += y.row(i).transpose();
    mean /= static_cast<double>(n);

    const bool can_split = depth < cfg.max_depth && n >= 2 * cfg.min_leaf;
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = 0.0;  // impurity decrease must be > 0

    if (can_split) {
      // Candidate features: deterministic partial shuffle of the pool.
      const int d = static_cast<int>(x.cols());
      int n_candidates = cfg.feature_fraction >= 1.0
                             ? d
                             : std::max(1, static_cast<int>(std::ceil(cfg.feature_fraction * d)));
      for (int i = 0; i < n_candidates; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - i)));
        std::swap(feature_pool[static_cast<std::size_t>(i)],
                  feature_pool[static_cast<std::size_t>(j)]);
      }

      const double parent = impurity(idx);
      for (int c = 0; c < n_candidates; ++c) {
        const int f = feature_pool[static_cast<std::size_t>(c)];
        sorted = idx;
        std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
          return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
        });
        scan_feature(f, parent, best_feature, best_threshold, best_score);
      }
    }

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(node_id)].value = mean;
      return node_id;
    }
    std::vector<int> left, right;
    for (int i : idx)
      (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }

  // Weighted impurity: Gini for classification, total SSE for regression.
  double impurity(const std::vector<int>& idx) const {
    const double n = static_cast<double>(idx.size());
    if (cfg.classification) {
      double ones = 0.0;
      for (int i : idx) ones += y(i, 0);
      const double p = ones / n;
      return n * 2.0 * p * (1.0 - p);
    }
    VectorXd sum = VectorXd::Zero(y.cols());
    double sumsq = 0.0;
    for (int i : idx) {
      sum += y.row(i).transpose();
      sumsq += y.row(i).squaredNorm();
    }
    return sumsq - sum.squaredNorm() / n;
  }

  void scan_feature(int f, double parent, int& best_feature, double& best_threshold,
                    double& best_score) const {
    const int n = static_cast<int>(sorted.size());
    const Eigen::Index k = y.cols();
    VectorXd left_sum = VectorXd::Zero(k);
    double left_sumsq = 0.0, left_ones = 0.0;
    VectorXd total_sum = VectorXd::Zero(k);
    double total_sumsq = 0.0, total_ones = 0.0;
    for (int i : sorted) {
      total_sum += y.row(i).transpose();
      total_sumsq += y.row(i).squaredNorm();
      if (cfg.classification) total_ones += y(i, 0);
    }
    for (int pos = 0; pos + 1 < n; ++pos) {
      const int i = sorted[static_cast<std::size_t>(pos)];
      left_sum += y.row(i).transpose();
      left_sumsq += y.row(i).squaredNorm();
      if (cfg.classification) left_ones += y(i, 0);
      const int nl = pos + 1, nr = n - nl;
      if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
      const double xv = x(i, f);
      const double xn = x(sorted[static_cast<std::size_t>(pos + 1)], f);
      if (xv == xn) continue;  // cannot separate equal values
      double child;
      if (cfg.classification) {
        const double pl = left_ones / nl;
        const double pr = (total_ones - left_ones) / nr;
        child = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr);
      } else {
        const double sse_l = left_sumsq - left_sum.squaredNorm() / nl;
        const VectorXd right_sum = total_sum - left_sum;
        const double sse_r = (total_sumsq - left_sumsq) - right_sum.squaredNorm() / nr;
        child = sse_l + sse_r;
      }
      const double score = parent - child;
      if (score > best_score + 1e-12) {
        best_score = score;
        best_feature = f;
        best_threshold = 0.5 * (xv + xn);
      }
    }
  }
};

}  // namespace

const VectorXd& Tree::predict(const double* x) const {
  int at = 0;
  for (;;) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (node.feature < 0) return node.value;
    at = x[node.feature] <= node.threshold ? node.left : node.right;
  }
}

void Forest::fit(const MatRX& x, const MatRX& y, const ForestConfig& cfg) {
  if (x.rows() == 0) fail("EmptyDataset", "forest fit: no rows");
  if (x.rows() != y.rows()) fail("DimensionMismatch", "forest fit: x/y rows");
  cfg_ = cfg;
  n_outputs_ = y.cols();
  trees_.assign(static_cast<std::size_t>(cfg.n_trees), Tree{});
  const int n = static_cast<int>(x.rows());
  parallel_blocks(static_cast<std::size_t>(cfg.n_trees), [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      Rng boot(derive_seed(cfg.seed, "forest.tree", t));
      std::vector<int> idx(static_cast<std::size_t>(n));
      if (cfg.bootstrap) {
        for (auto& i : idx) i = static_cast<int>(boot.below(static_cast<std::uint64_t>(n)));
        std::sort(idx.begin(), idx.end());
      } else {
        std::iota(idx.begin(), idx.end(), 0);
      }
      Builder builder{x, y, cfg, trees_[t], Rng(derive_seed(cfg.seed, "forest.split", t)), {}, {}};
      builder.feature_pool.resize(static_cast<std::size_t>(x.cols()));
      std::iota(builder.feature_pool.begin(), builder.feature_pool.end(), 0);
      builder.build(idx, 0);
    }
  });
}

VectorXd Forest::predict(const double* x) const {
  if (trees_.empty()) fail("UntrainedAdversary", "forest not fitted");
  VectorXd out = VectorXd::Zero(n_outputs_);
  for (const auto& tree : trees_) out += tree.predict(x);
  return out / static_cast<double>(trees_.size());
}

double Forest::predict_scalar(const double* x) const { return predict(x)(0); }

VectorXd Forest::predict_scalar_batch(const MatRX& x) const {
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_scalar(x.row(i).data());
  return out;
}

int Forest::max_tree_depth() const {
  int d = 0;
  for (const auto& t : trees_) d = std::max(d, t.depth);
  return d;
}

}  // namespace trajsim::forest
