#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace colondef {

/// A position in millimeters.
using Point3 = Eigen::Vector3d;
using PointList = std::vector<Point3>;

bool is_finite(const Point3& p);
bool all_finite(std::span<const Point3> pts);

/// Proper rigid motion p -> rotation * p + translation.
///
/// Construction through `from` checks that the rotation is orthonormal with
/// determinant +1 (both within 1e-9); the default value is the identity.
class RigidTransform {
public:
    static constexpr double kTolerance = 1e-9;

    RigidTransform();

    static RigidTransform identity() { return {}; }
    static RigidTransform translation(const Eigen::Vector3d& t);
    /// Rotation by `angle` radians about `axis` (need not be normalized).
    static RigidTransform rotation(const Eigen::Vector3d& axis, double angle);
    /// Throws InvalidInput if `rotation` is not a proper rotation.
    static RigidTransform from(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

    const Eigen::Matrix3d& rotation() const { return rotation_; }
    const Eigen::Vector3d& translation() const { return translation_; }

    Point3 operator()(const Point3& p) const { return rotation_ * p + translation_; }

    RigidTransform inverse() const;

    /// (a * b)(p) == a(b(p)).
    friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

    static bool is_proper_rotation(const Eigen::Matrix3d& r, double tol = kTolerance);

private:
    RigidTransform(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) : rotation_(r), translation_(t) {}

    Eigen::Matrix3d rotation_;
    Eigen::Vector3d translation_;
};

/// Applies `t` to every point, preserving order. Throws InvalidInput on an
/// empty or non-finite input.
PointList apply_transform(const RigidTransform& t, std::span<const Point3> pts);

/// Closed-form least-squares rigid alignment of corresponded point lists
/// (source[i] <-> target[i]): the proper rotation and translation minimizing
/// sum |R s_i + t - t_i|^2.
///
/// The rotation comes from the SVD of the centered cross-covariance; a
/// reflection is turned into a rotation by flipping the direction of the
/// smallest singular value. Throws InvalidInput for a length mismatch or
/// fewer than three points and DegenerateGeometry when the cross-covariance
/// has rank below two.
RigidTransform least_squares_align(std::span<const Point3> source, std::span<const Point3> target);

/// Root-mean-square distance between corresponded points.
double rmsd(std::span<const Point3> a, std::span<const Point3> b);

}  // namespace colondef
