#include "colondef/estimator.hpp"

#include <string>

#include "colondef/errors.hpp"
#include "colondef/random.hpp"

namespace colondef {

ShapeRegressor::ShapeRegressor(std::vector<Forest> forests, std::size_t n_scope_points, FeatureOptions features,
                               RegressorMetadata metadata)
    : forests_(std::move(forests)), n_scope_points_(n_scope_points), features_(features),
      metadata_(std::move(metadata)) {
    if (forests_.empty()) throw InvalidInput("shape regressor: no forests");
    if (n_scope_points_ == 0) throw InvalidInput("shape regressor: scope point count must be >= 1");
    for (std::size_t m = 0; m < forests_.size(); ++m) {
        if (forests_[m].feature_dim() != 3 * n_scope_points_) {
            throw InvalidInput("shape regressor: forest " + std::to_string(m) + " has feature dimension " +
                               std::to_string(forests_[m].feature_dim()) + ", expected " +
                               std::to_string(3 * n_scope_points_));
        }
    }
    if (metadata_.marker_means.size() != forests_.size()) {
        throw InvalidInput("shape regressor: baseline shape must have one point per forest");
    }
}

std::uint64_t marker_seed(std::uint64_t seed, std::size_t marker) { return derive_key(seed, {0x6d61726bULL, marker}); }

ShapeRegressor train_shape_regressor(std::span<const InsertionSequence> training, const EstimatorConfig& config) {
    if (training.empty()) throw InvalidInput("train_shape_regressor: no training sequences");

    const std::size_t n = training.front().scope_points();
    const std::size_t m = training.front().markers();
    if (n == 0) throw InvalidInput("train_shape_regressor: sequence '" + training.front().id + "' has no frames");
    for (const auto& seq : training) {
        for (std::size_t k = 0; k < seq.frames.size(); ++k) {
            const Frame& f = seq.frames[k];
            const std::string where = "sequence '" + seq.id + "' frame " + std::to_string(k);
            if (!f.colon) throw InvalidInput("train_shape_regressor: " + where + " has no colon shape");
            if (f.scope.size() != n || f.colon->size() != m) {
                throw InvalidInput("train_shape_regressor: " + where + " point counts differ from the first sequence");
            }
        }
    }
    if (m == 0) throw InvalidInput("train_shape_regressor: no training frames");

    std::vector<FeatureVector> features;
    RegressorMetadata meta;
    meta.seed = config.forest.seed;
    meta.marker_means.assign(m, Point3::Zero());
    for (const auto& seq : training) {
        meta.sequence_ids.push_back(seq.id);
        for (const auto& f : seq.frames) {
            features.push_back(featurize(f.scope, config.features));
            for (std::size_t j = 0; j < m; ++j) meta.marker_means[j] += (*f.colon)[j];
        }
    }
    meta.training_frames = features.size();
    for (auto& p : meta.marker_means) p /= static_cast<double>(meta.training_frames);

    std::vector<Forest> forests;
    forests.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        Dataset data(3 * n);
        std::size_t row = 0;
        for (const auto& seq : training) {
            for (const auto& f : seq.frames) data.add(features[row++], (*f.colon)[j]);
        }
        ForestParams params = config.forest;
        params.seed = marker_seed(config.forest.seed, j);
        forests.push_back(train_forest(data, params, config.threads));
    }
    return ShapeRegressor(std::move(forests), n, config.features, std::move(meta));
}

ColonShape estimate_colon_shape(const ShapeRegressor& regressor, const ScopeShape& scope) {
    if (scope.size() != regressor.scope_points()) {
        throw InvalidInput("estimate_colon_shape: scope has " + std::to_string(scope.size()) + " points, model expects " +
                           std::to_string(regressor.scope_points()));
    }
    const FeatureVector x = featurize(scope, regressor.feature_options());
    PointList out;
    out.reserve(regressor.markers());
    for (const auto& forest : regressor.forests()) out.push_back(forest.predict(x));
    return ColonShape(std::move(out));
}

void SmootherParams::validate() const {
    if (window < 1) throw InvalidInput("smoother: window must be >= 1");
}

ColonShape smooth_estimates(std::span<const ColonShape> history, const SmootherParams& params) {
    params.validate();
    if (history.empty()) throw InvalidInput("smooth_estimates: empty history");
    const std::size_t m = history.back().size();
    const std::size_t used = std::min(params.window, history.size());
    const auto recent = history.last(used);
    PointList out(m, Point3::Zero());
    for (const auto& shape : recent) {
        if (shape.size() != m) throw InvalidInput("smooth_estimates: inconsistent marker count in history");
        for (std::size_t j = 0; j < m; ++j) out[j] += shape[j];
    }
    for (auto& p : out) p /= static_cast<double>(used);
    return ColonShape(std::move(out));
}

OnlineEstimator::OnlineEstimator(const ShapeRegressor& regressor, PointList icp_target, IcpParams icp_params,
                                 SmootherParams smoother, DegeneratePolicy policy)
    : regressor_(regressor), icp_target_(std::move(icp_target)), icp_params_(icp_params), smoother_(smoother),
      policy_(policy), last_transform_(icp_params.initial_transform) {
    smoother_.validate();
    icp_params_.validate();
}

OnlineEstimator::Output OnlineEstimator::push(const ScopeShape& scope) {
    const std::size_t frame = frames_seen_;
    Output out;
    if (icp_target_.empty()) {
        out.registered_scope = scope;
    } else {
        RigidTransform transform;
        try {
            out.registration = icp(scope.points(), icp_target_, icp_params_);
            transform = out.registration->transform;
            last_transform_ = transform;
        } catch (const DegenerateGeometry& e) {
            if (policy_ == DegeneratePolicy::Propagate) {
                throw DegenerateGeometry("frame " + std::to_string(frame) + ": " + e.what(), e.iteration(), frame);
            }
            transform = last_transform_;
            out.registration_held = true;
        }
        out.registered_scope = ScopeShape(apply_transform(transform, scope.points()));
    }
    out.raw = estimate_colon_shape(regressor_, out.registered_scope);

    history_.push_back(out.raw);
    while (history_.size() > smoother_.window) history_.pop_front();
    const std::vector<ColonShape> window(history_.begin(), history_.end());
    out.smoothed = smooth_estimates(window, smoother_);
    ++frames_seen_;
    return out;
}

std::size_t register_sequence(InsertionSequence& seq, std::span<const Point3> target, const IcpParams& icp_params,
                              DegeneratePolicy policy) {
    icp_params.validate();
    if (target.empty()) throw InvalidInput("register_sequence: empty target");
    RigidTransform last = icp_params.initial_transform;
    std::size_t held = 0;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        auto& f = seq.frames[t];
        try {
            last = icp(f.scope.points(), target, icp_params).transform;
        } catch (const DegenerateGeometry& e) {
            if (policy == DegeneratePolicy::Propagate) {
                throw DegenerateGeometry(seq.id + " frame " + std::to_string(t) + ": " + e.what(), e.iteration(), t);
            }
            ++held;
        }
        f.scope = ScopeShape(apply_transform(last, f.scope.points()));
    }
    return held;
}

std::vector<ColonShape> run_online(const ShapeRegressor& regressor, std::span<const ScopeShape> scope_stream,
                                   std::span<const Point3> icp_target, const IcpParams& icp_params,
                                   const SmootherParams& smoother, DegeneratePolicy policy) {
    if (scope_stream.empty()) throw InvalidInput("run_online: empty scope stream");
    OnlineEstimator online(regressor, PointList(icp_target.begin(), icp_target.end()), icp_params, smoother, policy);
    std::vector<ColonShape> out;
    out.reserve(scope_stream.size());
    for (const auto& scope : scope_stream) out.push_back(online.push(scope).smoothed);
    return out;
}

}  // namespace colondef
