#include "colondef/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "colondef/errors.hpp"

namespace colondef {

namespace {

// Second singular value of the cross-covariance, relative to the first,
// below which the rotation is not determined.
constexpr double kRankTolerance = 1e-10;

void require_same_length(std::span<const Point3> a, std::span<const Point3> b, const char* op) {
    if (a.size() != b.size()) {
        throw InvalidInput(std::string(op) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()) + ")");
    }
}

Point3 centroid(std::span<const Point3> pts) {
    Point3 c = Point3::Zero();
    for (const auto& p : pts) c += p;
    return c / static_cast<double>(pts.size());
}

}  // namespace

bool is_finite(const Point3& p) { return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z()); }

bool all_finite(std::span<const Point3> pts) {
    for (const auto& p : pts) {
        if (!is_finite(p)) return false;
    }
    return true;
}

RigidTransform::RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

RigidTransform RigidTransform::translation(const Eigen::Vector3d& t) {
    return RigidTransform(Eigen::Matrix3d::Identity(), t);
}

RigidTransform RigidTransform::rotation(const Eigen::Vector3d& axis, double angle) {
    if (axis.norm() == 0.0 || !std::isfinite(angle) || !is_finite(axis)) {
        throw InvalidInput("rotation: axis must be non-zero and finite");
    }
    return RigidTransform(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), Eigen::Vector3d::Zero());
}

RigidTransform RigidTransform::from(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
    if (!rotation.allFinite() || !is_finite(translation)) {
        throw InvalidInput("rigid transform: non-finite component");
    }
    if (!is_proper_rotation(rotation)) {
        throw InvalidInput("rigid transform: rotation is not orthonormal with determinant +1");
    }
    return RigidTransform(rotation, translation);
}

bool RigidTransform::is_proper_rotation(const Eigen::Matrix3d& r, double tol) {
    const Eigen::Matrix3d gram = r.transpose() * r;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform RigidTransform::inverse() const {
    const Eigen::Matrix3d rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_));
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return RigidTransform(a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_);
}

PointList apply_transform(const RigidTransform& t, std::span<const Point3> pts) {
    if (pts.empty()) throw InvalidInput("apply_transform: empty point list");
    if (!all_finite(pts)) throw InvalidInput("apply_transform: non-finite point");
    PointList out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(t(p));
    return out;
}

RigidTransform least_squares_align(std::span<const Point3> source, std::span<const Point3> target) {
    require_same_length(source, target, "least_squares_align");
    if (source.size() < 3) throw InvalidInput("least_squares_align: need at least 3 point pairs");
    if (!all_finite(source) || !all_finite(target)) throw InvalidInput("least_squares_align: non-finite point");

    const Point3 cs = centroid(source);
    const Point3 ct = centroid(target);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        cov += (source[i] - cs) * (target[i] - ct).transpose();
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= kRankTolerance * sv(0)) {
        throw DegenerateGeometry("least_squares_align: coincident or collinear configuration");
    }

    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d r = v * fix * u.transpose();
    return RigidTransform::from(r, ct - r * cs);
}

double rmsd(std::span<const Point3> a, std::span<const Point3> b) {
    require_same_length(a, b, "rmsd");
    if (a.empty()) throw InvalidInput("rmsd: empty point list");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).squaredNorm();
    return std::sqrt(sum / static_cast<double>(a.size()));
}

}  // namespace colondef
