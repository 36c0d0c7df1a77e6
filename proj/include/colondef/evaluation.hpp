#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "colondef/shapes.hpp"

namespace colondef {

/// Held-out accuracy of a run: Euclidean marker errors (mm) for the model
/// and for the constant baseline shape.
struct EvaluationReport {
    std::string sequence_id;
    std::size_t frames = 0;
    std::size_t markers = 0;
    std::vector<double> marker_mean_error;
    std::vector<double> marker_rmse;
    double overall_mean_error = 0.0;
    std::vector<double> baseline_marker_mean_error;
    double baseline_overall_mean_error = 0.0;
    /// frame_errors[t][m] = |estimate_m - truth_m| at frame t.
    std::vector<std::vector<double>> frame_errors;
    std::vector<double> frame_mean_error;
    std::vector<double> baseline_frame_mean_error;
    /// Frames whose registration reused an earlier transform.
    std::size_t held_registrations = 0;
    nlohmann::json config = nlohmann::json::object();
};

/// Throws InvalidInput when the lists are empty, differ in length, or a
/// shape's marker count does not match the baseline.
EvaluationReport evaluate_estimates(std::span<const ColonShape> estimates, std::span<const ColonShape> truth,
                                    const ColonShape& baseline);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& doc);

}  // namespace colondef
