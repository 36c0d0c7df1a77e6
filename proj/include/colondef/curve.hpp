#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "colondef/geometry.hpp"

namespace colondef {

/// Uniform Catmull-Rom spline through a list of control points, with
/// reflected end tangents. Parameter u runs over [0, segments()], segment i
/// joining control points i and i+1. Arc length is integrated with composite
/// Gauss-Legendre quadrature and inverted by safeguarded Newton iteration.
class CatmullRomCurve {
public:
    /// Throws InvalidInput for fewer than two control points, coincident
    /// consecutive control points or a zero-length curve.
    explicit CatmullRomCurve(PointList control_points);

    std::size_t segments() const { return control_.size() - 1; }
    const PointList& control_points() const { return control_; }

    Point3 position(double u) const;
    Eigen::Vector3d derivative(double u) const;
    Eigen::Vector3d second_derivative(double u) const;
    /// |c' x c''| / |c'|^3 in 1/mm.
    double curvature(double u) const;

    double length() const { return cumulative_.back(); }
    /// Arc length from u = 0 to u.
    double arc_length(double u) const;
    /// Parameter whose arc length from the start is s (clamped to [0, length]).
    double parameter_at_arc(double s) const;
    Point3 point_at_arc(double s) const { return position(parameter_at_arc(s)); }

private:
    struct Coefficients {
        Eigen::Vector3d a, b, c, d;  // a + b t + c t^2 + d t^3
    };

    Coefficients coefficients(std::size_t segment) const;
    std::pair<std::size_t, double> locate(double u) const;
    double speed(double u) const { return derivative(u).norm(); }
    double integrate(double u0, double u1) const;

    PointList control_;
    std::vector<Coefficients> coeffs_;
    // Arc length at the start of every quadrature panel; kPanels per segment.
    std::vector<double> cumulative_;
};

}  // namespace colondef
