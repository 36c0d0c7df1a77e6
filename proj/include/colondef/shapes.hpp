#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colondef/geometry.hpp"

namespace colondef {

inline constexpr std::size_t kDefaultScopePoints = 6;
inline constexpr std::size_t kDefaultMarkers = 12;

/// Instrument shape: sensor positions ordered from the tip (cecum side) to
/// the base (anus side).
class ScopeShape {
public:
    ScopeShape() = default;
    /// Throws InvalidInput for an empty list or a non-finite point.
    explicit ScopeShape(PointList points);

    const PointList& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const Point3& operator[](std::size_t i) const { return points_[i]; }

    friend bool operator==(const ScopeShape&, const ScopeShape&) = default;

private:
    PointList points_;
};

/// Colon shape: marker positions ordered from the cecum to the anus.
class ColonShape {
public:
    ColonShape() = default;
    /// Throws InvalidInput for an empty list or a non-finite point.
    explicit ColonShape(PointList points);

    const PointList& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const Point3& operator[](std::size_t i) const { return points_[i]; }

    friend bool operator==(const ColonShape&, const ColonShape&) = default;

private:
    PointList points_;
};

struct Frame {
    std::size_t index = 0;
    double timestamp = 0.0;  // seconds
    ScopeShape scope;
    std::optional<ColonShape> colon;

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct InsertionSequence {
    std::string id;
    double frame_rate = 6.0;  // Hz
    std::vector<Frame> frames;

    std::size_t scope_points() const { return frames.empty() ? 0 : frames.front().scope.size(); }
    /// Marker count of the first frame carrying a colon shape, 0 if none does.
    std::size_t markers() const;
    bool has_all_colon_shapes() const;

    friend bool operator==(const InsertionSequence&, const InsertionSequence&) = default;
};

/// Throws InvalidInput when the hard sequence invariants fail: no frames,
/// non-positive frame rate, inconsistent point counts, or timestamps that
/// are not strictly increasing.
void check_sequence_invariants(const InsertionSequence& seq);

using FeatureVector = std::vector<double>;

struct FeatureOptions {
    /// Subtract the scope centroid before flattening.
    bool center = false;
};

/// Flattens a scope shape to (x1, y1, z1, ..., xN, yN, zN).
FeatureVector featurize(const ScopeShape& scope, const FeatureOptions& opts = {});
/// Inverse of the uncentered featurize. Throws InvalidInput if the length
/// is not a positive multiple of 3.
ScopeShape defeaturize(std::span<const double> values);

enum class IssueKind { PointJump, TimestampOrder, PointCount, MissingColon };

enum class PointRole { Scope, Marker };

struct SequenceIssue {
    IssueKind kind;
    std::size_t frame = 0;
    std::optional<PointRole> role;
    std::optional<std::size_t> point;
    std::string message;
};

struct ValidationReport {
    std::vector<SequenceIssue> issues;
    bool clean() const { return issues.empty(); }
};

struct ValidationOptions {
    double jump_threshold = 50.0;  // mm
    /// Also report frames lacking a colon shape.
    bool require_colon = false;
};

/// Screens a sequence without modifying it. A point is flagged when it lies
/// more than `jump_threshold` from the last position of the same point that
/// was not flagged, so a single-frame outlier is reported once rather than
/// on both its entry and exit.
ValidationReport validate_sequence(const InsertionSequence& seq, const ValidationOptions& opts = {});

}  // namespace colondef
