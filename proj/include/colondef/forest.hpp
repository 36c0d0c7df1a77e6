#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "colondef/geometry.hpp"

namespace colondef {

struct ForestParams {
    std::size_t n_trees = 100;
    /// Root has depth 0; nullopt means unlimited.
    std::optional<std::size_t> max_depth;
    std::size_t min_samples_leaf = 5;
    /// Candidate features per split; nullopt means ceil(D / 3).
    std::optional<std::size_t> mtry;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    std::size_t resolved_mtry(std::size_t feature_dim) const;
    /// Throws InvalidInput when a field is out of range for `feature_dim`.
    void validate(std::size_t feature_dim) const;

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Training samples: a row-major feature matrix with one 3-D target per row.
class Dataset {
public:
    explicit Dataset(std::size_t feature_dim);

    /// Throws InvalidInput on a dimension mismatch or non-finite value.
    void add(std::span<const double> features, const Point3& target);

    std::size_t feature_dim() const { return dim_; }
    std::size_t size() const { return targets_.size(); }
    bool empty() const { return targets_.empty(); }
    double value(std::size_t row, std::size_t feature) const { return features_[row * dim_ + feature]; }
    std::span<const double> row(std::size_t r) const { return {features_.data() + r * dim_, dim_}; }
    const Point3& target(std::size_t r) const { return targets_[r]; }
    const PointList& targets() const { return targets_; }

private:
    std::size_t dim_;
    std::vector<double> features_;
    PointList targets_;
};

struct SplitNode {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;

    friend bool operator==(const SplitNode&, const SplitNode&) = default;
};

struct LeafNode {
    Point3 mean = Point3::Zero();
    std::size_t n_samples = 0;

    friend bool operator==(const LeafNode&, const LeafNode&) = default;
};

using TreeNode = std::variant<SplitNode, LeafNode>;

/// Regression tree stored as a pre-order node list with the root at index 0.
/// Routing sends x[feature] <= threshold to the left child.
class Tree {
public:
    Tree() = default;
    /// Throws StructuralIntegrity unless `nodes` is a well-formed pre-order
    /// tree (left child directly after its parent, every index in range,
    /// every node reachable exactly once).
    explicit Tree(std::vector<TreeNode> nodes);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const LeafNode& route(std::span<const double> x) const;
    Point3 predict(std::span<const double> x) const { return route(x).mean; }
    std::size_t depth() const;
    std::size_t leaf_count() const;

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    /// Reduction of the summed per-coordinate squared deviation.
    double impurity_decrease = 0.0;
};

/// Best axis-aligned split of the listed rows (repeats allowed) over the
/// candidate features.
///
/// Impurity is the trace of the target scatter matrix. Thresholds are
/// midpoints between consecutive distinct feature values, both children must
/// hold at least `min_samples_leaf` rows, and candidates are scanned by
/// increasing feature index then increasing threshold; a later candidate wins
/// only if it beats the current best by more than a relative 1e-9 of the
/// node impurity. Returns nullopt when no legal split improves impurity by
/// more than 1e-12 (relative to the node impurity when that exceeds 1).
std::optional<SplitChoice> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> candidate_features,
                                      std::size_t min_samples_leaf);

/// Grows one CART tree on the listed rows. Candidate features at each node
/// are drawn without replacement from a stream keyed by (stream_key, node
/// pre-order counter).
Tree train_tree(const Dataset& data, std::span<const std::size_t> rows, const ForestParams& params,
                std::uint64_t stream_key);
Tree train_tree(const Dataset& data, const ForestParams& params, std::uint64_t stream_key);

class Forest {
public:
    Forest() = default;
    /// Throws InvalidInput when `trees` is empty.
    Forest(ForestParams params, std::size_t feature_dim, std::vector<Tree> trees);

    const ForestParams& params() const { return params_; }
    std::size_t feature_dim() const { return feature_dim_; }
    const std::vector<Tree>& trees() const { return trees_; }

    /// Unweighted mean of the per-tree leaf means. Throws InvalidInput on a
    /// dimension mismatch.
    Point3 predict(std::span<const double> x) const;

    friend bool operator==(const Forest&, const Forest&) = default;

private:
    ForestParams params_;
    std::size_t feature_dim_ = 0;
    std::vector<Tree> trees_;
};

/// Key of the per-tree stream used by train_forest.
std::uint64_t tree_stream_key(std::uint64_t seed, std::size_t tree_index);

/// Bagged forest. Tree i uses a bootstrap resample (or every row when
/// bootstrap is off) drawn from tree_stream_key(seed, i), so the result does
/// not depend on `threads` (0 picks the hardware concurrency).
Forest train_forest(const Dataset& data, const ForestParams& params, unsigned threads = 0);

}  // namespace colondef
