#pragma once

#include "fsbench/common.hpp"

namespace fsbench {

struct TreeParams {
  int max_depth = 2;
  std::size_t min_samples_leaf = 1;
  double max_features = 1.0;  // fraction of columns drawn per split
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::size_t count = 0;
};

/// Binary regression tree grown by least squares. On 0/1 targets the
/// squared-error criterion ranks splits exactly like Gini impurity
/// (node Gini = 2 * node variance), so classification trees use it too.
class RegressionTree {
 public:
  RegressionTree() = default;

  /// Grows a tree on `rows` (a multiset of row indices into x / target).
  static RegressionTree grow(const Matrix& x, const Vector& target, const IndexList& rows, const TreeParams& params,
                             Rng& rng, Vector* importance = nullptr) {
    RegressionTree t;
    t.n_features_ = static_cast<std::size_t>(x.cols());
    IndexList work = rows;
    t.build(x, target, work, 0, params, rng, importance);
    return t;
  }

  double predict_row(const Matrix& x, Eigen::Index r) const {
    int at = 0;
    while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(at)];
      at = x(r, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(at)].value;
  }

  // Index of the leaf reached by row r.
  int leaf_of(const Matrix& x, Eigen::Index r) const {
    int at = 0;
    while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(at)];
      at = x(r, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return at;
  }

  std::vector<TreeNode>& nodes() { return nodes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
  }

  int depth() const { return depth_from(0); }

 private:
  int depth_from(int at) const {
    const auto& nd = nodes_[static_cast<std::size_t>(at)];
    if (nd.feature < 0) return 0;
    return 1 + std::max(depth_from(nd.left), depth_from(nd.right));
  }

  int build(const Matrix& x, const Vector& t, IndexList& rows, int depth, const TreeParams& params, Rng& rng,
            Vector* importance) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (Index r : rows) sum += t[static_cast<Eigen::Index>(r)];
    const double cnt = static_cast<double>(rows.size());
    nodes_[static_cast<std::size_t>(id)].value = rows.empty() ? 0.0 : sum / cnt;
    nodes_[static_cast<std::size_t>(id)].count = rows.size();
    if (depth >= params.max_depth || rows.size() < 2 * params.min_samples_leaf || rows.size() < 2) return id;

    // candidate features for this split
    const std::size_t p = n_features_;
    const std::size_t m = std::clamp<std::size_t>(static_cast<std::size_t>(params.max_features * static_cast<double>(p)), 1, p);
    IndexList feats = iota_indices(p);
    for (std::size_t i = 0; i < m; ++i) std::swap(feats[i], feats[i + rng.below(p - i)]);
    feats.resize(m);

    const double parent_score = sum * sum / cnt;
    double best_gain = 1e-12 * std::max(1.0, parent_score);
    int best_feature = -1;
    double best_threshold = 0.0;
    IndexList order;
    for (Index f : feats) {
      const auto ff = static_cast<Eigen::Index>(f);
      order = rows;
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return x(static_cast<Eigen::Index>(a), ff) < x(static_cast<Eigen::Index>(b), ff);
      });
      double left = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left += t[static_cast<Eigen::Index>(order[i])];
        const double xv = x(static_cast<Eigen::Index>(order[i]), ff);
        const double xn = x(static_cast<Eigen::Index>(order[i + 1]), ff);
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < params.min_samples_leaf) continue;
        if (nr < params.min_samples_leaf) break;
        if (xv == xn) continue;
        const double right = sum - left;
        const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (xv + xn);
          if (best_threshold == xn) best_threshold = xv;  // midpoint rounding
        }
      }
    }
    if (best_feature < 0) return id;
    if (importance) (*importance)[best_feature] += best_gain;

    IndexList lrows, rrows;
    for (Index r : rows) (x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? lrows : rrows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(x, t, lrows, depth + 1, params, rng, importance);
    const int r = build(x, t, rrows, depth + 1, params, rng, importance);
    auto& nd = nodes_[static_cast<std::size_t>(id)];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = l;
    nd.right = r;
    return id;
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

}  // namespace fsbench
