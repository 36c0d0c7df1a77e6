#include "colondef/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "colondef/errors.hpp"
#include "colondef/random.hpp"

namespace colondef {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kMinDecrease = 1e-12;

// Midpoint of two consecutive distinct values, kept strictly below `hi` so
// that `lo` routes left and `hi` routes right.
double split_threshold(double lo, double hi) {
    const double mid = 0.5 * lo + 0.5 * hi;
    return (mid >= lo && mid < hi) ? mid : lo;
}

struct SplitSearch {
    double tie_tol = 0.0;
    double min_gain = 0.0;
    std::optional<SplitChoice> best;

    explicit SplitSearch(double parent_impurity)
        : tie_tol(kTieTolerance * parent_impurity), min_gain(kMinDecrease * std::max(1.0, parent_impurity)) {}

    void offer(std::size_t feature, double threshold, double decrease) {
        if (!(decrease > min_gain)) return;
        if (!best || decrease > best->impurity_decrease + tie_tol) best = SplitChoice{feature, threshold, decrease};
    }
};

// Sweeps one feature. `order` lists node slots sorted by (value, row, slot),
// `centered` holds per-slot targets minus the node mean and `total` their sum.
template <class ValueOf>
void scan_feature(std::size_t feature, std::span<const std::uint32_t> order, ValueOf value_of,
                  std::span<const Point3> centered, const Point3& total, std::size_t min_leaf,
                  SplitSearch& search) {
    const std::size_t n = order.size();
    const double baseline = total.squaredNorm() / static_cast<double>(n);
    Point3 left_sum = Point3::Zero();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += centered[order[i]];
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf) continue;
        if (n_right < min_leaf) break;
        const double lo = value_of(order[i]);
        const double hi = value_of(order[i + 1]);
        if (!(lo < hi)) continue;
        const Point3 right_sum = total - left_sum;
        // Between-children scatter equals the impurity decrease.
        const double decrease = left_sum.squaredNorm() / static_cast<double>(n_left) +
                                right_sum.squaredNorm() / static_cast<double>(n_right) - baseline;
        search.offer(feature, split_threshold(lo, hi), decrease);
    }
}

void check_params_dim(const ForestParams& params, std::size_t dim) { params.validate(dim); }

// Rows of `data` sorted by (value, row), one list per feature.
using RowOrder = std::vector<std::vector<std::uint32_t>>;

RowOrder sort_rows(const Dataset& data) {
    RowOrder order(data.feature_dim(), std::vector<std::uint32_t>(data.size()));
    for (std::size_t f = 0; f < data.feature_dim(); ++f) {
        auto& ord = order[f];
        std::iota(ord.begin(), ord.end(), 0u);
        std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double va = data.value(a, f);
            const double vb = data.value(b, f);
            return va < vb || (va == vb && a < b);
        });
    }
    return order;
}

// Grows one tree. Node sample sets are contiguous ranges of slots (indices
// into the row list, which may repeat rows); every per-feature slot order is
// kept sorted by (value, row, slot) through stable partitioning.
class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const RowOrder& row_order, std::span<const std::size_t> rows,
                const ForestParams& params, std::uint64_t key)
        : params_(params), key_(key), mtry_(params.resolved_mtry(data.feature_dim())) {
        const std::size_t n = rows.size();
        const std::size_t dim = data.feature_dim();
        n_slots_ = n;
        slot_values_.resize(dim * n);
        slot_targets_.resize(n);
        for (std::size_t s = 0; s < n; ++s) {
            slot_targets_[s] = data.target(rows[s]);
            for (std::size_t f = 0; f < dim; ++f) slot_values_[f * n + s] = data.value(rows[s], f);
        }

        // Slots of each row in ascending order (CSR layout).
        std::vector<std::uint32_t> first(data.size() + 1, 0);
        for (auto r : rows) ++first[r + 1];
        std::partial_sum(first.begin(), first.end(), first.begin());
        std::vector<std::uint32_t> fill(first.begin(), first.end() - 1);
        std::vector<std::uint32_t> slots_of_row(n);
        for (std::size_t s = 0; s < n; ++s) slots_of_row[fill[rows[s]]++] = static_cast<std::uint32_t>(s);

        by_slot_.resize(n);
        std::iota(by_slot_.begin(), by_slot_.end(), 0u);
        order_.assign(dim, std::vector<std::uint32_t>());
        for (std::size_t f = 0; f < dim; ++f) {
            auto& ord = order_[f];
            ord.reserve(n);
            for (auto r : row_order[f]) {
                for (auto k = first[r]; k < first[r + 1]; ++k) ord.push_back(slots_of_row[k]);
            }
        }
        centered_.resize(n);
        goes_left_.resize(n);
        scratch_.resize(n);
        features_.resize(dim);
    }

    Tree build() {
        grow(0, n_slots_, 0);
        return Tree(std::move(nodes_));
    }

private:
    const double* column(std::size_t f) const { return slot_values_.data() + f * n_slots_; }

    void grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const std::size_t node_id = nodes_.size();
        const std::uint64_t counter = node_counter_++;
        const std::size_t n = end - begin;

        Point3 sum = Point3::Zero();
        for (std::size_t i = begin; i < end; ++i) sum += slot_targets_[by_slot_[i]];
        const Point3 mean = sum / static_cast<double>(n);

        const bool depth_capped = params_.max_depth && depth >= *params_.max_depth;
        if (n < 2 * params_.min_samples_leaf || depth_capped) {
            nodes_.push_back(LeafNode{mean, n});
            return;
        }

        Point3 total = Point3::Zero();
        double impurity = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t s = by_slot_[i];
            centered_[s] = slot_targets_[s] - mean;
            total += centered_[s];
            impurity += centered_[s].squaredNorm();
        }

        SplitSearch search(impurity);
        for (std::size_t f : draw_features(counter)) {
            const double* col = column(f);
            scan_feature(
                f, std::span<const std::uint32_t>(order_[f]).subspan(begin, n), [col](std::uint32_t s) { return col[s]; },
                centered_, total, params_.min_samples_leaf, search);
        }
        if (!search.best) {
            nodes_.push_back(LeafNode{mean, n});
            return;
        }

        const SplitChoice split = *search.best;
        nodes_.push_back(SplitNode{split.feature, split.threshold, static_cast<std::uint32_t>(node_id + 1), 0});
        std::size_t n_left = 0;
        const double* split_col = column(split.feature);
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t s = by_slot_[i];
            goes_left_[s] = split_col[s] <= split.threshold;
            n_left += goes_left_[s];
        }
        partition(by_slot_, begin, end);
        for (auto& ord : order_) partition(ord, begin, end);

        grow(begin, begin + n_left, depth + 1);
        std::get<SplitNode>(nodes_[node_id]).right = static_cast<std::uint32_t>(nodes_.size());
        grow(begin + n_left, end, depth + 1);
    }

    // Ascending list of `mtry_` distinct features.
    std::span<const std::size_t> draw_features(std::uint64_t counter) {
        const std::size_t dim = features_.size();
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        CounterRng rng(derive_key(key_, {1, counter}));
        for (std::size_t i = 0; i < mtry_; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(dim - i));
            std::swap(features_[i], features_[j]);
        }
        std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
        return std::span<const std::size_t>(features_).first(mtry_);
    }

    // Stable partition of [begin, end) by goes_left_.
    void partition(std::vector<std::uint32_t>& slots, std::size_t begin, std::size_t end) {
        std::size_t out = begin;
        std::size_t spill = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t s = slots[i];
            if (goes_left_[s]) {
                slots[out++] = s;
            } else {
                scratch_[spill++] = s;
            }
        }
        std::copy_n(scratch_.begin(), spill, slots.begin() + static_cast<std::ptrdiff_t>(out));
    }

    const ForestParams& params_;
    std::uint64_t key_;
    std::size_t mtry_;

    std::size_t n_slots_ = 0;
    // Column-major copy of the features of every slot.
    std::vector<double> slot_values_;
    PointList slot_targets_;
    std::vector<std::uint32_t> by_slot_;
    std::vector<std::vector<std::uint32_t>> order_;
    std::vector<Point3> centered_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> scratch_;
    std::vector<std::size_t> features_;

    std::vector<TreeNode> nodes_;
    std::uint64_t node_counter_ = 0;
};

}  // namespace

std::size_t ForestParams::resolved_mtry(std::size_t feature_dim) const {
    return mtry ? *mtry : (feature_dim + 2) / 3;
}

void ForestParams::validate(std::size_t feature_dim) const {
    if (n_trees < 1) throw InvalidInput("forest params: n_trees must be >= 1");
    if (min_samples_leaf < 1) throw InvalidInput("forest params: min_samples_leaf must be >= 1");
    if (feature_dim < 1) throw InvalidInput("forest params: feature dimension must be >= 1");
    const std::size_t m = resolved_mtry(feature_dim);
    if (m < 1 || m > feature_dim) {
        throw InvalidInput("forest params: mtry must lie in [1, " + std::to_string(feature_dim) + "]");
    }
}

Dataset::Dataset(std::size_t feature_dim) : dim_(feature_dim) {
    if (feature_dim == 0) throw InvalidInput("dataset: feature dimension must be >= 1");
}

void Dataset::add(std::span<const double> features, const Point3& target) {
    if (features.size() != dim_) {
        throw InvalidInput("dataset: feature vector has length " + std::to_string(features.size()) + ", expected " +
                           std::to_string(dim_));
    }
    for (double v : features) {
        if (!std::isfinite(v)) throw InvalidInput("dataset: non-finite feature");
    }
    if (!is_finite(target)) throw InvalidInput("dataset: non-finite target");
    features_.insert(features_.end(), features.begin(), features.end());
    targets_.push_back(target);
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw StructuralIntegrity("tree has no nodes");
    std::vector<std::size_t> pending_right;
    std::size_t pos = 0;
    for (;;) {
        if (pos >= nodes_.size()) throw StructuralIntegrity("tree node index out of range");
        if (const auto* split = std::get_if<SplitNode>(&nodes_[pos])) {
            if (split->left != pos + 1) throw StructuralIntegrity("split left child must follow its parent");
            if (split->right <= split->left || split->right >= nodes_.size()) {
                throw StructuralIntegrity("split right child index out of range");
            }
            if (!std::isfinite(split->threshold)) throw StructuralIntegrity("non-finite split threshold");
            pending_right.push_back(split->right);
            pos = split->left;
            continue;
        }
        const auto& leaf = std::get<LeafNode>(nodes_[pos]);
        if (leaf.n_samples == 0 || !is_finite(leaf.mean)) throw StructuralIntegrity("invalid leaf");
        if (pending_right.empty()) break;
        const std::size_t next = pending_right.back();
        pending_right.pop_back();
        if (next != pos + 1) throw StructuralIntegrity("right child does not follow the left subtree");
        pos = next;
    }
    if (pos + 1 != nodes_.size()) throw StructuralIntegrity("unreachable trailing nodes");
}

const LeafNode& Tree::route(std::span<const double> x) const {
    std::size_t pos = 0;
    while (const auto* split = std::get_if<SplitNode>(&nodes_[pos])) {
        pos = x[split->feature] <= split->threshold ? split->left : split->right;
    }
    return std::get<LeafNode>(nodes_[pos]);
}

std::size_t Tree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [pos, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (const auto* split = std::get_if<SplitNode>(&nodes_[pos])) {
            stack.emplace_back(split->left, d + 1);
            stack.emplace_back(split->right, d + 1);
        }
    }
    return deepest;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return std::holds_alternative<LeafNode>(n); }));
}

std::optional<SplitChoice> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> candidate_features,
                                      std::size_t min_samples_leaf) {
    const std::size_t n = rows.size();
    if (n < 2) throw InvalidInput("best_split: need at least 2 samples");
    if (min_samples_leaf < 1) throw InvalidInput("best_split: min_samples_leaf must be >= 1");

    std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
    for (auto f : features) {
        if (f >= data.feature_dim()) throw InvalidInput("best_split: candidate feature out of range");
    }

    Point3 sum = Point3::Zero();
    for (auto r : rows) sum += data.target(r);
    const Point3 mean = sum / static_cast<double>(n);
    std::vector<Point3> centered(n);
    Point3 total = Point3::Zero();
    double impurity = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        centered[s] = data.target(rows[s]) - mean;
        total += centered[s];
        impurity += centered[s].squaredNorm();
    }

    SplitSearch search(impurity);
    std::vector<std::uint32_t> order(n);
    for (auto f : features) {
        auto value_of = [&](std::uint32_t s) { return data.value(rows[s], f); };
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double va = value_of(a);
            const double vb = value_of(b);
            return va < vb || (va == vb && (rows[a] < rows[b] || (rows[a] == rows[b] && a < b)));
        });
        scan_feature(f, order, value_of, centered, total, min_samples_leaf, search);
    }
    return search.best;
}

Tree train_tree(const Dataset& data, std::span<const std::size_t> rows, const ForestParams& params,
                std::uint64_t stream_key) {
    if (rows.empty()) throw InvalidInput("train_tree: empty sample set");
    check_params_dim(params, data.feature_dim());
    for (auto r : rows) {
        if (r >= data.size()) throw InvalidInput("train_tree: row index out of range");
    }
    return TreeBuilder(data, sort_rows(data), rows, params, stream_key).build();
}

Tree train_tree(const Dataset& data, const ForestParams& params, std::uint64_t stream_key) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return train_tree(data, rows, params, stream_key);
}

Forest::Forest(ForestParams params, std::size_t feature_dim, std::vector<Tree> trees)
    : params_(params), feature_dim_(feature_dim), trees_(std::move(trees)) {
    if (trees_.empty()) throw InvalidInput("forest: no trees");
    if (feature_dim_ == 0) throw InvalidInput("forest: feature dimension must be >= 1");
    for (const auto& t : trees_) {
        for (const auto& node : t.nodes()) {
            if (const auto* s = std::get_if<SplitNode>(&node); s && s->feature >= feature_dim_) {
                throw StructuralIntegrity("forest: split feature index out of range");
            }
        }
    }
}

Point3 Forest::predict(std::span<const double> x) const {
    if (x.size() != feature_dim_) {
        throw InvalidInput("forest predict: feature vector has length " + std::to_string(x.size()) + ", expected " +
                           std::to_string(feature_dim_));
    }
    Point3 sum = Point3::Zero();
    for (const auto& t : trees_) sum += t.route(x).mean;
    return sum / static_cast<double>(trees_.size());
}

std::uint64_t tree_stream_key(std::uint64_t seed, std::size_t tree_index) { return derive_key(seed, {tree_index}); }

Forest train_forest(const Dataset& data, const ForestParams& params, unsigned threads) {
    if (data.empty()) throw InvalidInput("train_forest: empty sample set");
    params.validate(data.feature_dim());

    const std::size_t n = data.size();
    const RowOrder row_order = sort_rows(data);
    std::vector<Tree> trees(params.n_trees);
    auto train_one = [&](std::size_t i) {
        const std::uint64_t key = tree_stream_key(params.seed, i);
        std::vector<std::size_t> rows(n);
        if (params.bootstrap) {
            CounterRng rng(derive_key(key, {0}));
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        trees[i] = TreeBuilder(data, row_order, rows, params, key).build();
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, params.n_trees));
    if (threads <= 1) {
        for (std::size_t i = 0; i < params.n_trees; ++i) train_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < params.n_trees; i = next++) train_one(i);
            });
        }
    }
    return Forest(params, data.feature_dim(), std::move(trees));
}

}  // namespace colondef
