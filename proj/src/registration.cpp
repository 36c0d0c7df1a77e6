#include "colondef/registration.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "colondef/errors.hpp"

namespace colondef {

namespace {

PointList gather(std::span<const Point3> pts, const std::vector<std::size_t>& idx) {
    PointList out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(pts[i]);
    return out;
}

double nearest_rmsd(std::span<const Point3> moved, std::span<const Point3> target) {
    const auto idx = nearest_correspondences(moved, target);
    return rmsd(moved, gather(target, idx));
}

}  // namespace

void IcpParams::validate() const {
    if (max_iterations < 1) throw InvalidInput("icp: max_iterations must be >= 1");
    if (!(convergence_tol > 0.0)) throw InvalidInput("icp: convergence_tol must be > 0");
}

std::vector<std::size_t> nearest_correspondences(std::span<const Point3> source, std::span<const Point3> target) {
    if (source.empty() || target.empty()) throw InvalidInput("nearest_correspondences: empty point list");
    std::vector<std::size_t> out;
    out.reserve(source.size());
    for (const auto& s : source) {
        std::size_t best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < target.size(); ++j) {
            const double d2 = (target[j] - s).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = j;
            }
        }
        out.push_back(best);
    }
    return out;
}

IcpResult icp(std::span<const Point3> source, std::span<const Point3> target, const IcpParams& params) {
    params.validate();
    if (source.size() < 3 || target.size() < 3) throw InvalidInput("icp: source and target need at least 3 points");
    if (!all_finite(source) || !all_finite(target)) throw InvalidInput("icp: non-finite point");

    IcpResult result;
    result.transform = params.initial_transform;
    PointList moved = apply_transform(result.transform, source);
    double previous = nearest_rmsd(moved, target);
    result.rmsd_trace.push_back(previous);

    for (std::size_t iter = 1; iter <= params.max_iterations; ++iter) {
        const PointList matched = gather(target, nearest_correspondences(moved, target));
        RigidTransform step;
        try {
            step = least_squares_align(moved, matched);
        } catch (const DegenerateGeometry& e) {
            throw DegenerateGeometry(std::string("icp iteration ") + std::to_string(iter) + ": " + e.what(), iter);
        }
        result.transform = step * result.transform;
        moved = apply_transform(result.transform, source);
        const double current = nearest_rmsd(moved, target);
        result.rmsd_trace.push_back(current);
        result.iterations_used = iter;
        result.final_rmsd = current;
        if (std::abs(previous - current) < params.convergence_tol) {
            result.converged = true;
            break;
        }
        previous = current;
    }
    return result;
}

}  // namespace colondef
