#include "colondef/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "colondef/errors.hpp"
#include "colondef/random.hpp"

namespace colondef {

namespace {

// Straightening weight = kappa * kStraighteningGain * k / (k + kCurvatureRef).
constexpr double kStraighteningGain = 1.0;
constexpr double kCurvatureRef = 1.0 / 150.0;  // 1/mm
constexpr double kTableStep = 1.0;             // mm

Eigen::Vector3d surface_normal(const Eigen::Vector3d& tangent) {
    const Eigen::Vector3d t = tangent.normalized();
    for (const Eigen::Vector3d& up : {Eigen::Vector3d::UnitZ().eval(), Eigen::Vector3d::UnitY().eval()}) {
        const Eigen::Vector3d n = up - up.dot(t) * t;
        if (n.norm() > 1e-6) return n.normalized();
    }
    return Eigen::Vector3d::UnitX();
}

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(field, what);
}

}  // namespace

PointList default_rest_curve() {
    return {
        {250.0, 0.0, 0.0},      // cecum
        {260.0, 150.0, 10.0},   // ascending colon
        {240.0, 300.0, 20.0},   // hepatic flexure
        {120.0, 330.0, 35.0},   // transverse colon
        {0.0, 280.0, 45.0},
        {-120.0, 330.0, 35.0},
        {-240.0, 310.0, 20.0},  // splenic flexure
        {-260.0, 160.0, 10.0},  // descending colon
        {-240.0, 20.0, 0.0},
        {-150.0, -60.0, -15.0}, // sigmoid
        {-60.0, -10.0, -25.0},
        {-20.0, -90.0, -10.0},  // rectum
        {0.0, -160.0, 0.0},     // anus
    };
}

void PhantomConfig::validate() const {
    require(n_centerline_samples >= 2, "phantom.n_centerline_samples", "must be >= 2");
    require(marker_count >= 2, "phantom.marker_count", "must be >= 2");
    require(scope_point_count >= 2, "phantom.scope_point_count", "must be >= 2");
    require(std::isfinite(sensor_spacing) && sensor_spacing > 0.0, "phantom.sensor_spacing", "must be > 0");
    require(std::isfinite(surface_radius) && surface_radius >= 0.0, "phantom.surface_radius", "must be >= 0");
    require(rest_curve.size() >= 2, "phantom.rest_curve", "needs at least two control points");
    require(all_finite(rest_curve), "phantom.rest_curve", "non-finite control point");
}

void InsertionConfig::validate() const {
    require(n_frames >= 1, "insertion.n_frames", "must be >= 1");
    require(std::isfinite(frame_rate) && frame_rate > 0.0, "insertion.frame_rate", "must be > 0");
    require(coupling_strength >= 0.0 && coupling_strength <= 1.0, "insertion.coupling_strength",
            "must lie in [0, 1]");
    require(std::isfinite(coupling_decay) && coupling_decay >= 0.0, "insertion.coupling_decay", "must be >= 0");
    require(std::isfinite(max_marker_displacement) && max_marker_displacement >= 0.0,
            "insertion.max_marker_displacement", "must be >= 0");
    require(std::isfinite(noise_sigma_scope) && noise_sigma_scope >= 0.0, "insertion.noise_sigma_scope",
            "must be >= 0");
    require(std::isfinite(noise_sigma_marker) && noise_sigma_marker >= 0.0, "insertion.noise_sigma_marker",
            "must be >= 0");
}

Phantom generate_phantom(const PhantomConfig& cfg) {
    cfg.validate();
    CatmullRomCurve curve = [&] {
        try {
            return CatmullRomCurve(cfg.rest_curve);
        } catch (const InvalidInput& e) {
            throw InvalidInput(std::string("phantom.rest_curve: ") + e.what());
        }
    }();
    const double length = curve.length();

    Phantom ph{cfg, curve, {}, {}, {}, {}, {}, {}};
    for (std::size_t i = 0; i < cfg.n_centerline_samples; ++i) {
        const double s = length * static_cast<double>(i) / static_cast<double>(cfg.n_centerline_samples - 1);
        ph.centerline.push_back(curve.point_at_arc(s));
    }

    PointList markers;
    for (std::size_t m = 0; m < cfg.marker_count; ++m) {
        const double s = length * static_cast<double>(m) / static_cast<double>(cfg.marker_count - 1);
        const double u = curve.parameter_at_arc(s);
        ph.marker_arc.push_back(s);
        markers.push_back(curve.position(u) + cfg.surface_radius * surface_normal(curve.derivative(u)));
    }
    ph.rest_colon = ColonShape(std::move(markers));

    const std::size_t table_size = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(length / kTableStep)) + 1);
    for (std::size_t j = 0; j < table_size; ++j) {
        const double s = j + 1 == table_size ? length : length * static_cast<double>(j) / static_cast<double>(table_size - 1);
        const double u = curve.parameter_at_arc(s);
        ph.table_arc.push_back(s);
        ph.table_point.push_back(curve.position(u));
        ph.table_curvature.push_back(curve.curvature(u));
    }
    return ph;
}

double tip_depth(const InsertionConfig& cfg, double colon_length, std::size_t frame) {
    if (cfg.n_frames <= 1) return colon_length;
    const double f = static_cast<double>(frame) / static_cast<double>(cfg.n_frames - 1);
    return cfg.direction == MotionDirection::Withdrawal ? colon_length * (1.0 - f) : colon_length * f;
}

CleanFrame simulate_clean_frame(const Phantom& ph, const InsertionConfig& cfg, double depth) {
    const double length = ph.length();
    const double d = std::clamp(depth, 0.0, length);
    const double tip_arc = length - d;
    const Point3 tip = ph.curve.point_at_arc(tip_arc);
    const Point3 anus = ph.table_point.back();

    // Path from the tip toward the anus.
    PointList path{tip};
    std::vector<double> walked{0.0};
    const auto first = std::upper_bound(ph.table_arc.begin(), ph.table_arc.end(), tip_arc);
    for (auto it = first; it != ph.table_arc.end(); ++it) {
        const std::size_t j = static_cast<std::size_t>(it - ph.table_arc.begin());
        const double s = *it;
        Point3 p = ph.table_point[j];
        if (d > 0.0 && j + 1 < ph.table_arc.size()) {
            const Point3 chord = tip + ((s - tip_arc) / d) * (anus - tip);
            const double k = ph.table_curvature[j];
            const double w = std::min(1.0, cfg.coupling_strength * kStraighteningGain * k / (k + kCurvatureRef));
            p += w * (chord - p);
        }
        walked.push_back(walked.back() + (p - path.back()).norm());
        path.push_back(p);
    }

    CleanFrame out;
    out.depth = d;
    const auto& pc = ph.config;
    for (std::size_t i = 0; i < pc.scope_point_count; ++i) {
        const double target = static_cast<double>(i) * pc.sensor_spacing;
        if (target >= walked.back()) {
            out.scope.push_back(path.back());
            continue;
        }
        const auto it = std::upper_bound(walked.begin(), walked.end(), target);
        const std::size_t hi = static_cast<std::size_t>(it - walked.begin());
        const std::size_t lo = hi - 1;
        const double span = walked[hi] - walked[lo];
        const double f = span > 0.0 ? (target - walked[lo]) / span : 0.0;
        out.scope.push_back(path[lo] + f * (path[hi] - path[lo]));
    }

    for (const auto& rest : ph.rest_colon.points()) {
        std::size_t nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < out.scope.size(); ++i) {
            const double dist = (out.scope[i] - rest).norm();
            if (dist < best) {
                best = dist;
                nearest = i;
            }
        }
        const double decay = cfg.coupling_decay > 0.0 ? std::exp(-best / cfg.coupling_decay) : (best == 0.0 ? 1.0 : 0.0);
        Eigen::Vector3d disp = cfg.coupling_strength * decay * (out.scope[nearest] - rest);
        const double mag = disp.norm();
        if (mag > cfg.max_marker_displacement) disp *= cfg.max_marker_displacement / mag;
        out.markers.push_back(rest + disp);
    }
    return out;
}

InsertionSequence simulate_insertion(const Phantom& ph, const InsertionConfig& cfg) {
    cfg.validate();
    InsertionSequence seq;
    seq.id = cfg.id;
    seq.frame_rate = cfg.frame_rate;
    seq.frames.reserve(cfg.n_frames);

    auto add_noise = [&](PointList& pts, std::size_t frame, std::uint64_t role, double sigma) {
        if (sigma == 0.0) return;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CounterRng rng(derive_key(cfg.seed, {frame, role, i}));
            const double nx = rng.normal();
            const double ny = rng.normal();
            const double nz = rng.normal();
            pts[i] += sigma * Eigen::Vector3d(nx, ny, nz);
        }
    };

    for (std::size_t t = 0; t < cfg.n_frames; ++t) {
        CleanFrame clean = simulate_clean_frame(ph, cfg, tip_depth(cfg, ph.length(), t));
        add_noise(clean.scope, t, 0, cfg.noise_sigma_scope);
        add_noise(clean.markers, t, 1, cfg.noise_sigma_marker);
        Frame f;
        f.index = t;
        f.timestamp = static_cast<double>(t) / cfg.frame_rate;
        f.scope = ScopeShape(std::move(clean.scope));
        f.colon = ColonShape(std::move(clean.markers));
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

}  // namespace colondef
