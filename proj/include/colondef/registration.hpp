#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "colondef/geometry.hpp"

namespace colondef {

struct IcpParams {
    std::size_t max_iterations = 50;
    /// Stop once the RMSD changes by less than this between iterations (mm).
    double convergence_tol = 1e-6;
    RigidTransform initial_transform;

    /// Throws InvalidInput unless max_iterations >= 1 and convergence_tol > 0.
    void validate() const;
};

struct IcpResult {
    /// Maps the source into the target frame.
    RigidTransform transform;
    double final_rmsd = 0.0;
    std::size_t iterations_used = 0;
    /// True when the RMSD-change criterion fired, false when the iteration
    /// budget ran out.
    bool converged = false;
    /// RMSD to the nearest target points: entry 0 after the initial
    /// transform, entry k after iteration k.
    std::vector<double> rmsd_trace;
};

/// Index of the Euclidean-nearest target point for each source point; ties
/// go to the lowest index. Exhaustive search.
std::vector<std::size_t> nearest_correspondences(std::span<const Point3> source, std::span<const Point3> target);

/// Point-to-point ICP without known correspondences. Each iteration matches
/// every transformed source point to its nearest target point, solves the
/// least-squares rigid alignment for those pairs and applies it.
///
/// Throws DegenerateGeometry (with the 1-based iteration index) when an
/// alignment step is not unique.
IcpResult icp(std::span<const Point3> source, std::span<const Point3> target, const IcpParams& params = {});

}  // namespace colondef
