#include "colondef/shapes.hpp"

#include <string>

#include "colondef/errors.hpp"

namespace colondef {

namespace {

void check_points(const PointList& pts, const char* what) {
    if (pts.empty()) throw InvalidInput(std::string(what) + ": empty point list");
    if (!all_finite(pts)) throw InvalidInput(std::string(what) + ": non-finite point");
}

}  // namespace

ScopeShape::ScopeShape(PointList points) : points_(std::move(points)) { check_points(points_, "scope shape"); }

ColonShape::ColonShape(PointList points) : points_(std::move(points)) { check_points(points_, "colon shape"); }

std::size_t InsertionSequence::markers() const {
    for (const auto& f : frames) {
        if (f.colon) return f.colon->size();
    }
    return 0;
}

bool InsertionSequence::has_all_colon_shapes() const {
    for (const auto& f : frames) {
        if (!f.colon) return false;
    }
    return !frames.empty();
}

void check_sequence_invariants(const InsertionSequence& seq) {
    const std::string where = "sequence '" + seq.id + "'";
    if (seq.frames.empty()) throw InvalidInput(where + ": no frames");
    if (!(seq.frame_rate > 0.0)) throw InvalidInput(where + ": frame rate must be positive");
    const std::size_t n = seq.scope_points();
    const std::size_t m = seq.markers();
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
        const Frame& f = seq.frames[k];
        if (f.scope.size() != n) {
            throw InvalidInput(where + ": frame " + std::to_string(k) + " has " + std::to_string(f.scope.size()) +
                               " scope points, expected " + std::to_string(n));
        }
        if (f.colon && f.colon->size() != m) {
            throw InvalidInput(where + ": frame " + std::to_string(k) + " has " + std::to_string(f.colon->size()) +
                               " markers, expected " + std::to_string(m));
        }
        if (k > 0 && !(f.timestamp > seq.frames[k - 1].timestamp)) {
            throw InvalidInput(where + ": frame " + std::to_string(k) + " timestamp not strictly increasing");
        }
    }
}

FeatureVector featurize(const ScopeShape& scope, const FeatureOptions& opts) {
    Point3 offset = Point3::Zero();
    if (opts.center) {
        for (const auto& p : scope.points()) offset += p;
        offset /= static_cast<double>(scope.size());
    }
    FeatureVector v;
    v.reserve(3 * scope.size());
    for (const auto& p : scope.points()) {
        const Point3 q = p - offset;
        v.push_back(q.x());
        v.push_back(q.y());
        v.push_back(q.z());
    }
    return v;
}

ScopeShape defeaturize(std::span<const double> values) {
    if (values.empty() || values.size() % 3 != 0) {
        throw InvalidInput("defeaturize: length must be a positive multiple of 3");
    }
    PointList pts;
    pts.reserve(values.size() / 3);
    for (std::size_t i = 0; i < values.size(); i += 3) pts.emplace_back(values[i], values[i + 1], values[i + 2]);
    return ScopeShape(std::move(pts));
}

namespace {

void screen_points(const PointList& current, std::vector<std::optional<Point3>>& reference, std::size_t frame,
                   PointRole role, double threshold, ValidationReport& report) {
    for (std::size_t i = 0; i < current.size() && i < reference.size(); ++i) {
        if (reference[i] && (current[i] - *reference[i]).norm() > threshold) {
            report.issues.push_back({IssueKind::PointJump, frame, role, i,
                                     std::string(role == PointRole::Scope ? "scope point " : "marker ") +
                                         std::to_string(i) + " jumped more than threshold"});
        } else {
            reference[i] = current[i];
        }
    }
}

}  // namespace

ValidationReport validate_sequence(const InsertionSequence& seq, const ValidationOptions& opts) {
    ValidationReport report;
    const std::size_t n = seq.scope_points();
    const std::size_t m = seq.markers();
    std::vector<std::optional<Point3>> scope_ref(n);
    std::vector<std::optional<Point3>> marker_ref(m);

    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
        const Frame& f = seq.frames[k];
        if (k > 0 && !(f.timestamp > seq.frames[k - 1].timestamp)) {
            report.issues.push_back({IssueKind::TimestampOrder, k, std::nullopt, std::nullopt,
                                     "timestamp not strictly increasing"});
        }
        if (f.scope.size() != n) {
            report.issues.push_back({IssueKind::PointCount, k, PointRole::Scope, std::nullopt,
                                     "scope point count differs from first frame"});
        } else {
            screen_points(f.scope.points(), scope_ref, k, PointRole::Scope, opts.jump_threshold, report);
        }
        if (!f.colon) {
            if (opts.require_colon) {
                report.issues.push_back(
                    {IssueKind::MissingColon, k, PointRole::Marker, std::nullopt, "frame lacks a colon shape"});
            }
        } else if (f.colon->size() != m) {
            report.issues.push_back({IssueKind::PointCount, k, PointRole::Marker, std::nullopt,
                                     "marker count differs from first colon frame"});
        } else {
            screen_points(f.colon->points(), marker_ref, k, PointRole::Marker, opts.jump_threshold, report);
        }
    }
    return report;
}

}  // namespace colondef
