#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colondef/forest.hpp"
#include "colondef/registration.hpp"
#include "colondef/shapes.hpp"

namespace colondef {

struct EstimatorConfig {
    ForestParams forest;
    FeatureOptions features;
    /// Worker threads for tree training; 0 uses the hardware concurrency.
    unsigned threads = 0;
};

struct RegressorMetadata {
    std::vector<std::string> sequence_ids;
    std::uint64_t seed = 0;
    /// Per-marker mean of the training targets (the rest-shape baseline).
    PointList marker_means;
    std::size_t training_frames = 0;

    friend bool operator==(const RegressorMetadata&, const RegressorMetadata&) = default;
};

/// Bank of per-marker forests: forest m maps a featurized scope shape to the
/// position of marker m.
class ShapeRegressor {
public:
    ShapeRegressor() = default;
    /// Throws InvalidInput unless every forest has feature_dim 3 * n_scope_points.
    ShapeRegressor(std::vector<Forest> forests, std::size_t n_scope_points, FeatureOptions features,
                   RegressorMetadata metadata);

    std::size_t markers() const { return forests_.size(); }
    std::size_t scope_points() const { return n_scope_points_; }
    const std::vector<Forest>& forests() const { return forests_; }
    const FeatureOptions& feature_options() const { return features_; }
    const RegressorMetadata& metadata() const { return metadata_; }
    ColonShape baseline_shape() const { return ColonShape(metadata_.marker_means); }

    friend bool operator==(const ShapeRegressor& a, const ShapeRegressor& b) {
        return a.forests_ == b.forests_ && a.n_scope_points_ == b.n_scope_points_ &&
               a.features_.center == b.features_.center && a.metadata_ == b.metadata_;
    }

private:
    std::vector<Forest> forests_;
    std::size_t n_scope_points_ = 0;
    FeatureOptions features_;
    RegressorMetadata metadata_;
};

/// Seed of the forest for marker m.
std::uint64_t marker_seed(std::uint64_t seed, std::size_t marker);

/// Pools every frame of every sequence into (featurized scope, marker m)
/// pairs and trains forest m on them. Throws InvalidInput naming the
/// sequence and frame when a colon shape is missing or point counts differ.
ShapeRegressor train_shape_regressor(std::span<const InsertionSequence> training, const EstimatorConfig& config);

/// Per-marker prediction. The scope must already be in the reference frame.
ColonShape estimate_colon_shape(const ShapeRegressor& regressor, const ScopeShape& scope);

struct SmootherParams {
    std::size_t window = 5;

    void validate() const;
};

/// Causal moving average: per marker and coordinate, the mean of the last
/// min(window, history size) shapes. The newest shape is history.back().
ColonShape smooth_estimates(std::span<const ColonShape> history, const SmootherParams& params);

/// What the online pipeline does when a frame cannot be registered.
enum class DegeneratePolicy {
    /// Throw DegenerateGeometry tagged with the frame index.
    Propagate,
    /// Reuse the last successful transform (the initial transform before any
    /// success). Frames with fewer than three distinct sensor positions, as
    /// when the scope is nearly withdrawn, cannot be registered.
    HoldLast,
};

/// Registers every scope shape of `seq` onto `target` frame by frame, with
/// the same degenerate-frame handling as OnlineEstimator. Returns the number
/// of frames whose transform was held.
std::size_t register_sequence(InsertionSequence& seq, std::span<const Point3> target, const IcpParams& icp_params,
                              DegeneratePolicy policy = DegeneratePolicy::Propagate);

/// Stateful single-stream pipeline: register, estimate, smooth.
class OnlineEstimator {
public:
    /// With `icp_target` empty the registration step is skipped.
    OnlineEstimator(const ShapeRegressor& regressor, PointList icp_target, IcpParams icp_params,
                    SmootherParams smoother, DegeneratePolicy policy = DegeneratePolicy::Propagate);

    struct Output {
        ColonShape smoothed;
        ColonShape raw;
        ScopeShape registered_scope;
        std::optional<IcpResult> registration;
        /// Set when HoldLast replaced a degenerate registration.
        bool registration_held = false;
    };

    /// Under DegeneratePolicy::Propagate, throws DegenerateGeometry tagged
    /// with the frame index on a failed registration.
    Output push(const ScopeShape& scope);

    std::size_t frames_seen() const { return frames_seen_; }

private:
    const ShapeRegressor& regressor_;
    PointList icp_target_;
    IcpParams icp_params_;
    SmootherParams smoother_;
    DegeneratePolicy policy_;
    RigidTransform last_transform_;
    std::deque<ColonShape> history_;
    std::size_t frames_seen_ = 0;
};

/// Runs OnlineEstimator over a whole stream and returns the smoothed shapes.
std::vector<ColonShape> run_online(const ShapeRegressor& regressor, std::span<const ScopeShape> scope_stream,
                                   std::span<const Point3> icp_target, const IcpParams& icp_params,
                                   const SmootherParams& smoother,
                                   DegeneratePolicy policy = DegeneratePolicy::Propagate);

}  // namespace colondef
