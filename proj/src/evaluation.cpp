#include "colondef/evaluation.hpp"

#include <cmath>

#include "colondef/errors.hpp"

namespace colondef {

EvaluationReport evaluate_estimates(std::span<const ColonShape> estimates, std::span<const ColonShape> truth,
                                    const ColonShape& baseline) {
    if (estimates.empty()) throw InvalidInput("evaluate: no frames");
    if (estimates.size() != truth.size()) {
        throw InvalidInput("evaluate: " + std::to_string(estimates.size()) + " estimates for " +
                           std::to_string(truth.size()) + " truth frames");
    }
    const std::size_t m_count = baseline.size();
    const std::size_t t_count = estimates.size();

    EvaluationReport r;
    r.frames = t_count;
    r.markers = m_count;
    r.marker_mean_error.assign(m_count, 0.0);
    r.marker_rmse.assign(m_count, 0.0);
    r.baseline_marker_mean_error.assign(m_count, 0.0);
    r.frame_errors.reserve(t_count);

    double total = 0.0;
    double baseline_total = 0.0;
    for (std::size_t t = 0; t < t_count; ++t) {
        if (estimates[t].size() != m_count || truth[t].size() != m_count) {
            throw InvalidInput("evaluate: frame " + std::to_string(t) + " has a marker count different from " +
                               std::to_string(m_count));
        }
        std::vector<double> errs(m_count);
        double frame_sum = 0.0;
        double baseline_sum = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            const double e = (estimates[t][m] - truth[t][m]).norm();
            const double b = (baseline[m] - truth[t][m]).norm();
            errs[m] = e;
            frame_sum += e;
            baseline_sum += b;
            r.marker_mean_error[m] += e;
            r.marker_rmse[m] += e * e;
            r.baseline_marker_mean_error[m] += b;
        }
        total += frame_sum;
        baseline_total += baseline_sum;
        r.frame_mean_error.push_back(frame_sum / static_cast<double>(m_count));
        r.baseline_frame_mean_error.push_back(baseline_sum / static_cast<double>(m_count));
        r.frame_errors.push_back(std::move(errs));
    }
    const auto n = static_cast<double>(t_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        r.marker_mean_error[m] /= n;
        r.marker_rmse[m] = std::sqrt(r.marker_rmse[m] / n);
        r.baseline_marker_mean_error[m] /= n;
    }
    r.overall_mean_error = total / (n * static_cast<double>(m_count));
    r.baseline_overall_mean_error = baseline_total / (n * static_cast<double>(m_count));
    return r;
}

nlohmann::json report_to_json(const EvaluationReport& r) {
    nlohmann::json doc;
    doc["sequence"] = r.sequence_id;
    doc["frames"] = r.frames;
    doc["markers"] = r.markers;
    doc["overall_mean_error_mm"] = r.overall_mean_error;
    doc["baseline_overall_mean_error_mm"] = r.baseline_overall_mean_error;
    doc["marker_mean_error_mm"] = r.marker_mean_error;
    doc["marker_rmse_mm"] = r.marker_rmse;
    doc["baseline_marker_mean_error_mm"] = r.baseline_marker_mean_error;
    doc["held_registrations"] = r.held_registrations;
    doc["frame_mean_error_mm"] = r.frame_mean_error;
    doc["baseline_frame_mean_error_mm"] = r.baseline_frame_mean_error;
    doc["frame_errors_mm"] = r.frame_errors;
    doc["config"] = r.config;
    return doc;
}

EvaluationReport report_from_json(const nlohmann::json& doc) {
    try {
        EvaluationReport r;
        r.sequence_id = doc.at("sequence").get<std::string>();
        r.frames = doc.at("frames").get<std::size_t>();
        r.markers = doc.at("markers").get<std::size_t>();
        r.overall_mean_error = doc.at("overall_mean_error_mm").get<double>();
        r.baseline_overall_mean_error = doc.at("baseline_overall_mean_error_mm").get<double>();
        r.marker_mean_error = doc.at("marker_mean_error_mm").get<std::vector<double>>();
        r.marker_rmse = doc.at("marker_rmse_mm").get<std::vector<double>>();
        r.baseline_marker_mean_error = doc.at("baseline_marker_mean_error_mm").get<std::vector<double>>();
        r.held_registrations = doc.at("held_registrations").get<std::size_t>();
        r.frame_mean_error = doc.at("frame_mean_error_mm").get<std::vector<double>>();
        r.baseline_frame_mean_error = doc.at("baseline_frame_mean_error_mm").get<std::vector<double>>();
        r.frame_errors = doc.at("frame_errors_mm").get<std::vector<std::vector<double>>>();
        r.config = doc.at("config");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what(), 1);
    }
}

}  // namespace colondef
