#pragma once

// CART regression trees and a bagged random forest.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "nete/error.hpp"
#include "nete/rng.hpp"

namespace nete {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 5;
  std::size_t max_features = 0;  ///< 0 means ceil(sqrt(p))
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_trees < 1) throw DomainError("forest needs at least one tree");
    if (min_leaf < 1) throw DomainError("min_leaf must be >= 1");
  }
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  /// Rows of `features` are observations (row-major, n x p). `order[f]` lists
  /// the row indices ascending in feature f; `multiplicity[r]` is how often row
  /// r is in this tree's sample (bootstrap counts, or 1 each).
  static RegressionTree fit(std::span<const double> features, std::size_t p,
                            std::span<const double> target,
                            const std::vector<std::vector<std::uint32_t>>& order,
                            std::span<const std::uint32_t> multiplicity, std::size_t max_depth,
                            std::size_t min_leaf, std::size_t max_features, Rng& rng) {
    RegressionTree tree;
    Builder builder{features, p, target, max_depth, min_leaf, std::min(max_features, p), rng, tree.nodes_, {}, {}, {}, {}};
    builder.candidates.resize(p);
    std::iota(builder.candidates.begin(), builder.candidates.end(), std::size_t{0});

    std::size_t m = 0;
    for (auto c : multiplicity) m += c;
    builder.sorted.assign(p, std::vector<std::uint32_t>());
    for (std::size_t f = 0; f < p; ++f) {
      auto& list = builder.sorted[f];
      list.reserve(m);
      for (std::uint32_t r : order[f])
        for (std::uint32_t c = 0; c < multiplicity[r]; ++c) list.push_back(r);
    }
    builder.goes_left.assign(multiplicity.size(), 0);
    builder.buffer.resize(m);
    if (m > 0) builder.grow(0, m, 0);
    return tree;
  }

  double predict(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes_[at].feature >= 0) {
      const Node& node = nodes_[at];
      at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                  : node.right);
    }
    return nodes_[at].value;
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Builder {
    std::span<const double> x;
    std::size_t p;
    std::span<const double> y;
    std::size_t max_depth;
    std::size_t min_leaf;
    std::size_t max_features;
    Rng& rng;
    std::vector<Node>& nodes;
    std::vector<std::size_t> candidates;
    std::vector<std::vector<std::uint32_t>> sorted;  ///< per feature, node ranges stay contiguous
    std::vector<std::uint8_t> goes_left;
    std::vector<std::uint32_t> buffer;

    double at(std::size_t row, std::size_t feature) const { return x[row * p + feature]; }

    std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
      const auto id = static_cast<std::int32_t>(nodes.size());
      nodes.push_back(Node{});
      const std::size_t count = end - begin;
      const auto& rows = sorted[0];

      double sum = 0.0;
      bool constant = true;
      const double first = y[rows[begin]];
      for (std::size_t i = begin; i < end; ++i) {
        sum += y[rows[i]];
        constant = constant && y[rows[i]] == first;
      }
      nodes[static_cast<std::size_t>(id)].value = constant ? first : sum / static_cast<double>(count);
      if (constant || depth >= max_depth || count < 2 * min_leaf) return id;

      // Partial Fisher-Yates: the first max_features entries become this node's candidates.
      for (std::size_t j = 0; j < max_features; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.below(p - j));
        std::swap(candidates[j], candidates[pick]);
      }

      int best_feature = -1;
      double best_threshold = 0.0;
      double best_gain = 0.0;
      const double total_sq = sum * sum / static_cast<double>(count);
      for (std::size_t c = 0; c < max_features; ++c) {
        const std::size_t f = candidates[c];
        const auto& list = sorted[f];
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < count; ++i) {
          const std::uint32_t r = list[begin + i];
          left_sum += y[r];
          const std::size_t n_left = i + 1;
          if (n_left < min_leaf) continue;
          if (count - n_left < min_leaf) break;
          const double v = at(r, f);
          const double v_next = at(list[begin + i + 1], f);
          if (!(v < v_next)) continue;
          const double right_sum = sum - left_sum;
          // SSE reduction up to the constant total sum of squares.
          const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                              right_sum * right_sum / static_cast<double>(count - n_left) - total_sq;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (v + v_next);
            if (!(best_threshold > v)) best_threshold = v;
          }
        }
      }
      if (best_feature < 0) return id;

      const auto bf = static_cast<std::size_t>(best_feature);
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t r = sorted[bf][i];
        goes_left[r] = at(r, bf) <= best_threshold ? 1 : 0;
      }
      std::size_t mid = begin;
      for (auto& list : sorted) {
        std::size_t l = begin;
        std::size_t b = 0;
        for (std::size_t i = begin; i < end; ++i) {
          const std::uint32_t r = list[i];
          if (goes_left[r]) list[l++] = r;
          else buffer[b++] = r;
        }
        std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(b),
                  list.begin() + static_cast<std::ptrdiff_t>(l));
        mid = l;
      }
      const std::int32_t left = grow(begin, mid, depth + 1);
      const std::int32_t right = grow(mid, end, depth + 1);
      Node& node = nodes[static_cast<std::size_t>(id)];
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.left = left;
      node.right = right;
      return id;
    }
  };

  std::vector<Node> nodes_;
};

/// Bagged regression forest. Tree t is grown from its own stream
/// derive_seed(seed, t), so results do not depend on fitting order.
class RandomForest {
 public:
  static RandomForest fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                          const ForestParams& params) {
    params.validate();
    const auto n = static_cast<std::size_t>(features.rows());
    const auto p = static_cast<std::size_t>(features.cols());
    if (n == 0 || p == 0) throw InsufficientDataError("random forest needs a nonempty design");
    if (n > std::numeric_limits<std::uint32_t>::max()) throw DomainError("forest supports at most 2^32 - 1 rows");
    if (static_cast<std::size_t>(target.size()) != n) throw DomainError("forest target length mismatch");

    std::vector<double> rowmajor(n * p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j)
        rowmajor[i * p + j] = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const std::vector<double> y(target.data(), target.data() + n);

    const std::size_t mtry =
        params.max_features > 0 ? std::min(params.max_features, p)
                                : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));

    // Stable ascending order of every feature, shared by all trees.
    std::vector<std::vector<std::uint32_t>> order(p, std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < p; ++f) {
      std::iota(order[f].begin(), order[f].end(), std::uint32_t{0});
      std::stable_sort(order[f].begin(), order[f].end(),
                       [&](std::uint32_t a, std::uint32_t b) { return rowmajor[a * p + f] < rowmajor[b * p + f]; });
    }

    RandomForest forest;
    forest.p_ = p;
    forest.trees_.reserve(params.n_trees);
    std::vector<std::uint32_t> multiplicity(n);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      Rng rng(derive_seed(params.seed, t));
      if (params.bootstrap) {
        std::fill(multiplicity.begin(), multiplicity.end(), 0u);
        for (std::size_t i = 0; i < n; ++i) ++multiplicity[static_cast<std::size_t>(rng.below(n))];
      } else {
        std::fill(multiplicity.begin(), multiplicity.end(), 1u);
      }
      forest.trees_.push_back(RegressionTree::fit(rowmajor, p, y, order, multiplicity, params.max_depth,
                                                  params.min_leaf, mtry, rng));
    }
    return forest;
  }

  double predict(std::span<const double> x) const {
    if (x.size() != p_) throw DomainError("forest prediction feature length mismatch");
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict(x);
    return sum / static_cast<double>(trees_.size());
  }

  std::size_t n_features() const noexcept { return p_; }
  std::size_t n_trees() const noexcept { return trees_.size(); }

 private:
  std::size_t p_ = 0;
  std::vector<RegressionTree> trees_;
};

}  // namespace nete
