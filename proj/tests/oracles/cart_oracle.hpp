#pragma once

// Exhaustive reference CART used to check the optimized tree builder. It
// evaluates every candidate split from scratch, with two-pass sums of squared
// deviations, so it shares no code or bookkeeping with the builder.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "colondef/forest.hpp"

namespace oracle {

struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    colondef::Point3 mean = colondef::Point3::Zero();
    std::size_t n = 0;
    std::unique_ptr<Node> left;
    std::unique_ptr<Node> right;
};

inline double sse(const colondef::Dataset& data, const std::vector<std::size_t>& rows) {
    if (rows.empty()) return 0.0;
    colondef::Point3 mean = colondef::Point3::Zero();
    for (auto r : rows) mean += data.target(r);
    mean /= static_cast<double>(rows.size());
    double s = 0.0;
    for (auto r : rows) s += (data.target(r) - mean).squaredNorm();
    return s;
}

inline double midpoint(double lo, double hi) {
    const double mid = 0.5 * lo + 0.5 * hi;
    return (mid >= lo && mid < hi) ? mid : lo;
}

struct Candidate {
    std::size_t feature;
    double threshold;
    double decrease;
};

inline std::optional<Candidate> best_split(const colondef::Dataset& data, const std::vector<std::size_t>& rows,
                                           std::size_t min_leaf) {
    const double parent = sse(data, rows);
    const double tie = 1e-9 * parent;
    const double min_gain = 1e-12 * std::max(1.0, parent);
    std::optional<Candidate> best;
    for (std::size_t f = 0; f < data.feature_dim(); ++f) {
        std::vector<double> values;
        for (auto r : rows) values.push_back(data.value(r, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            const double thr = midpoint(values[i], values[i + 1]);
            std::vector<std::size_t> left, right;
            for (auto r : rows) (data.value(r, f) <= thr ? left : right).push_back(r);
            if (left.size() < min_leaf || right.size() < min_leaf) continue;
            const double decrease = parent - sse(data, left) - sse(data, right);
            if (!(decrease > min_gain)) continue;
            if (!best || decrease > best->decrease + tie) best = Candidate{f, thr, decrease};
        }
    }
    return best;
}

inline std::unique_ptr<Node> grow(const colondef::Dataset& data, const std::vector<std::size_t>& rows,
                                  std::size_t min_leaf, std::optional<std::size_t> max_depth, std::size_t depth) {
    auto node = std::make_unique<Node>();
    node->n = rows.size();
    for (auto r : rows) node->mean += data.target(r);
    node->mean /= static_cast<double>(rows.size());
    if (rows.size() < 2 * min_leaf || (max_depth && depth >= *max_depth)) return node;
    const auto split = best_split(data, rows, min_leaf);
    if (!split) return node;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (data.value(r, split->feature) <= split->threshold ? left : right).push_back(r);
    node->leaf = false;
    node->feature = split->feature;
    node->threshold = split->threshold;
    node->left = grow(data, left, min_leaf, max_depth, depth + 1);
    node->right = grow(data, right, min_leaf, max_depth, depth + 1);
    return node;
}

inline std::unique_ptr<Node> train(const colondef::Dataset& data, std::size_t min_leaf,
                                   std::optional<std::size_t> max_depth) {
    std::vector<std::size_t> rows(data.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return grow(data, rows, min_leaf, max_depth, 0);
}

inline colondef::Point3 predict(const Node& root, std::span<const double> x) {
    const Node* n = &root;
    while (!n->leaf) n = x[n->feature] <= n->threshold ? n->left.get() : n->right.get();
    return n->mean;
}

/// True when `tree` has exactly the oracle's shape, features and bitwise
/// thresholds, and leaf sizes.
inline bool same_structure(const Node& node, const colondef::Tree& tree, std::size_t index = 0) {
    const auto& nodes = tree.nodes();
    if (index >= nodes.size()) return false;
    if (node.leaf) {
        const auto* leaf = std::get_if<colondef::LeafNode>(&nodes[index]);
        return leaf && leaf->n_samples == node.n;
    }
    const auto* split = std::get_if<colondef::SplitNode>(&nodes[index]);
    if (!split || split->feature != node.feature) return false;
    if (std::bit_cast<std::uint64_t>(split->threshold) != std::bit_cast<std::uint64_t>(node.threshold)) return false;
    return same_structure(*node.left, tree, split->left) && same_structure(*node.right, tree, split->right);
}

}  // namespace oracle
