#include "colondef/curve.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Geometry>

#include "colondef/errors.hpp"

namespace colondef {

namespace {

constexpr std::size_t kPanels = 16;

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                          -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                          0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                            0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                            0.2223810344533745, 0.1012285362903763};

}  // namespace

CatmullRomCurve::CatmullRomCurve(PointList control_points) : control_(std::move(control_points)) {
    if (control_.size() < 2) throw InvalidInput("curve: need at least two control points");
    if (!all_finite(control_)) throw InvalidInput("curve: non-finite control point");
    for (std::size_t i = 0; i + 1 < control_.size(); ++i) {
        if ((control_[i + 1] - control_[i]).norm() == 0.0) {
            throw InvalidInput("curve: coincident consecutive control points");
        }
    }
    for (std::size_t s = 0; s < segments(); ++s) coeffs_.push_back(coefficients(s));

    cumulative_.push_back(0.0);
    for (std::size_t s = 0; s < segments(); ++s) {
        for (std::size_t p = 0; p < kPanels; ++p) {
            const double u0 = static_cast<double>(s) + static_cast<double>(p) / kPanels;
            const double u1 = static_cast<double>(s) + static_cast<double>(p + 1) / kPanels;
            cumulative_.push_back(cumulative_.back() + integrate(u0, u1));
        }
    }
    if (!(length() > 0.0)) throw InvalidInput("curve: zero arc length");
}

CatmullRomCurve::Coefficients CatmullRomCurve::coefficients(std::size_t s) const {
    const std::size_t last = control_.size() - 1;
    const Point3& p1 = control_[s];
    const Point3& p2 = control_[s + 1];
    const Point3 p0 = s == 0 ? Point3(2.0 * p1 - p2) : control_[s - 1];
    const Point3 p3 = s + 1 == last ? Point3(2.0 * p2 - p1) : control_[s + 2];
    return {p1, 0.5 * (p2 - p0), 0.5 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3), 0.5 * (-p0 + 3.0 * p1 - 3.0 * p2 + p3)};
}

std::pair<std::size_t, double> CatmullRomCurve::locate(double u) const {
    const double max_u = static_cast<double>(segments());
    u = std::clamp(u, 0.0, max_u);
    std::size_t s = static_cast<std::size_t>(std::floor(u));
    if (s >= segments()) s = segments() - 1;
    return {s, u - static_cast<double>(s)};
}

Point3 CatmullRomCurve::position(double u) const {
    const auto [s, t] = locate(u);
    const auto& k = coeffs_[s];
    return k.a + t * (k.b + t * (k.c + t * k.d));
}

Eigen::Vector3d CatmullRomCurve::derivative(double u) const {
    const auto [s, t] = locate(u);
    const auto& k = coeffs_[s];
    return k.b + t * (2.0 * k.c + t * 3.0 * k.d);
}

Eigen::Vector3d CatmullRomCurve::second_derivative(double u) const {
    const auto [s, t] = locate(u);
    const auto& k = coeffs_[s];
    return 2.0 * k.c + 6.0 * t * k.d;
}

double CatmullRomCurve::curvature(double u) const {
    const Eigen::Vector3d d1 = derivative(u);
    const double speed = d1.norm();
    if (speed == 0.0) return 0.0;
    return d1.cross(second_derivative(u)).norm() / (speed * speed * speed);
}

double CatmullRomCurve::integrate(double u0, double u1) const {
    const double half = 0.5 * (u1 - u0);
    const double mid = 0.5 * (u1 + u0);
    double sum = 0.0;
    for (std::size_t i = 0; i < kNodes.size(); ++i) sum += kWeights[i] * speed(mid + half * kNodes[i]);
    return sum * half;
}

double CatmullRomCurve::arc_length(double u) const {
    u = std::clamp(u, 0.0, static_cast<double>(segments()));
    const double scaled = u * kPanels;
    std::size_t panel = static_cast<std::size_t>(std::floor(scaled));
    if (panel >= cumulative_.size() - 1) panel = cumulative_.size() - 2;
    const double start = static_cast<double>(panel) / kPanels;
    return cumulative_[panel] + integrate(start, u);
}

double CatmullRomCurve::parameter_at_arc(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= length()) return static_cast<double>(segments());
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    const std::size_t panel = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    double lo = static_cast<double>(panel) / kPanels;
    double hi = static_cast<double>(panel + 1) / kPanels;
    double u = lo + (hi - lo) * (s - cumulative_[panel]) / (cumulative_[panel + 1] - cumulative_[panel]);
    for (int iter = 0; iter < 60; ++iter) {
        const double f = cumulative_[panel] + integrate(static_cast<double>(panel) / kPanels, u) - s;
        if (std::abs(f) < 1e-12 * std::max(1.0, length())) break;
        if (f > 0.0) hi = u; else lo = u;
        const double v = speed(u);
        double next = v > 0.0 ? u - f / v : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        u = next;
    }
    return u;
}

}  // namespace colondef
