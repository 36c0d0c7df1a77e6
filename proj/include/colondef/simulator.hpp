#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "colondef/curve.hpp"
#include "colondef/shapes.hpp"

namespace colondef {

/// Control points of the default rest curve (mm): cecum, ascending colon,
/// transverse colon, descending colon, sigmoid, rectum, anus. Roughly planar
/// with a small out-of-plane perturbation, ~1500 mm long.
PointList default_rest_curve();

struct PhantomConfig {
    std::size_t n_centerline_samples = 200;
    PointList rest_curve = default_rest_curve();
    std::size_t marker_count = kDefaultMarkers;
    std::size_t scope_point_count = kDefaultScopePoints;
    double sensor_spacing = 80.0;  // mm between scope sensors
    double surface_radius = 20.0;  // mm, marker offset from the centerline

    /// Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const PhantomConfig&, const PhantomConfig&) = default;
};

struct Phantom {
    PhantomConfig config;
    CatmullRomCurve curve;
    /// Centerline samples at equal arc-length spacing, cecum first.
    PointList centerline;
    /// Undeformed marker positions, cecum first.
    ColonShape rest_colon;
    /// Arc position (from the cecum) of the centerline station under each marker.
    std::vector<double> marker_arc;
    /// Dense equal-arc table used to build scope paths: arc positions and
    /// the matching centerline points and curvatures.
    std::vector<double> table_arc;
    PointList table_point;
    std::vector<double> table_curvature;

    double length() const { return curve.length(); }
};

/// Deterministic phantom geometry. Markers sit at equal arc-length stations,
/// offset by the surface radius along the +z direction orthogonalized
/// against the local tangent (the side facing a camera above the phantom).
Phantom generate_phantom(const PhantomConfig& cfg);

enum class MotionDirection { Withdrawal, Insertion };

struct InsertionConfig {
    std::string id = "insertion";
    std::size_t n_frames = 300;
    double frame_rate = 6.0;  // Hz
    MotionDirection direction = MotionDirection::Withdrawal;
    double coupling_strength = 0.5;        // kappa in [0, 1]
    double coupling_decay = 60.0;          // lambda, mm
    double max_marker_displacement = 40.0; // mm
    double noise_sigma_scope = 0.5;        // mm per axis
    double noise_sigma_marker = 1.0;       // mm per axis
    std::uint64_t seed = 0;

    void validate() const;

    friend bool operator==(const InsertionConfig&, const InsertionConfig&) = default;
};

/// Insertion depth of the tip (arc length from the anus, mm) at frame t.
/// Withdrawal runs linearly from the full length down to 0.
double tip_depth(const InsertionConfig& cfg, double colon_length, std::size_t frame);

/// Noise-free frame geometry, exposed for property checks.
struct CleanFrame {
    double depth = 0.0;
    PointList scope;
    PointList markers;
};

/// Scope path and coupled marker displacement at one depth:
///  - the path follows the rest centerline from the anus to the tip, pulled
///    toward the anus-tip chord with a weight that grows with local
///    curvature and with kappa;
///  - sensors sit every `sensor_spacing` mm back from the tip along the
///    path; sensors past the anus clamp to the anus;
///  - each marker moves toward its nearest sensor by
///    kappa * exp(-dist / lambda) * (sensor - marker), clipped to the
///    maximum displacement.
CleanFrame simulate_clean_frame(const Phantom& phantom, const InsertionConfig& cfg, double depth);

/// Full sequence: clean geometry plus independent Gaussian noise from
/// substreams keyed by (seed, frame, role, point).
InsertionSequence simulate_insertion(const Phantom& phantom, const InsertionConfig& cfg);

}  // namespace colondef
