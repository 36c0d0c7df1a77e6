#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "colondef/geometry.hpp"
#include "colondef/random.hpp"
#include "colondef/simulator.hpp"

namespace testing {

inline colondef::Point3 gaussian_point(colondef::CounterRng& rng, double sigma = 1.0) {
    const double x = rng.normal();
    const double y = rng.normal();
    const double z = rng.normal();
    return sigma * colondef::Point3(x, y, z);
}

inline colondef::PointList random_points(std::uint64_t key, std::size_t n, double sigma = 50.0) {
    colondef::CounterRng rng(key);
    colondef::PointList pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(gaussian_point(rng, sigma));
    return pts;
}

/// Random proper rigid motion: rotation angle up to `max_angle` about a
/// uniform axis, translation length up to `max_shift`.
inline colondef::RigidTransform random_transform(colondef::CounterRng& rng, double max_angle, double max_shift) {
    const Eigen::Vector3d axis = gaussian_point(rng).normalized();
    const double angle = max_angle * rng.uniform();
    const Eigen::Vector3d dir = gaussian_point(rng).normalized();
    const double shift = max_shift * rng.uniform();
    return colondef::RigidTransform::translation(shift * dir) * colondef::RigidTransform::rotation(axis, angle);
}

/// Closed non-planar 30-point curve (trefoil-like), centered at the origin.
inline colondef::PointList closed_test_curve(std::size_t n = 30) {
    colondef::PointList pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
        pts.emplace_back(60 * std::cos(s) + 20 * std::cos(2 * s), 60 * std::sin(s) - 20 * std::sin(2 * s),
                         30 * std::sin(3 * s));
    }
    colondef::Point3 c = colondef::Point3::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(n);
    for (auto& p : pts) p -= c;
    return pts;
}

/// Short simulated insertion on the default phantom.
inline colondef::InsertionSequence short_insertion(std::uint64_t seed, std::size_t frames = 40, double kappa = 0.5) {
    static const colondef::Phantom phantom = colondef::generate_phantom({});
    colondef::InsertionConfig cfg;
    cfg.id = "short-" + std::to_string(seed);
    cfg.n_frames = frames;
    cfg.coupling_strength = kappa;
    cfg.seed = seed;
    return colondef::simulate_insertion(phantom, cfg);
}

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("colondef-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
