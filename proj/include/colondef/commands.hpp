#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "colondef/config.hpp"
#include "colondef/dataio.hpp"
#include "colondef/evaluation.hpp"

namespace colondef {

using PathList = std::vector<std::filesystem::path>;

struct SimulateSummary {
    PathList files;
    std::size_t frames_per_sequence = 0;
};

/// Writes cfg.sequences insertions to `out_dir` as insertion-01.seq, ...;
/// insertion k uses the seed derived from (cfg.seed, k).
SimulateSummary cmd_simulate(const AppConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct TrainSummary {
    std::size_t regressors = 0;
    std::vector<std::size_t> trees_per_regressor;
    std::size_t training_frames = 0;
    std::vector<std::string> sequence_ids;
    std::size_t held_registrations = 0;
};

/// Registration target for `file`: the configured reference, else the
/// centerline of the phantom echoed in its header. Empty when registration
/// is disabled; InvalidInput when neither source is available.
PointList registration_target(const AppConfig& cfg, const SequenceFile& file);

/// Training sequences as the forests see them (registered when enabled).
std::vector<InsertionSequence> prepare_training(const AppConfig& cfg, std::span<const SequenceFile> files,
                                                std::size_t* held = nullptr);

ShapeRegressor train_model(const AppConfig& cfg, std::span<const SequenceFile> files, TrainSummary* summary = nullptr);

TrainSummary cmd_train(const AppConfig& cfg, std::span<const std::filesystem::path> sequences,
                       const std::filesystem::path& model_out, std::ostream& log);

struct EstimateRun {
    std::vector<EstimateFrame> frames;
    std::size_t held_registrations = 0;
};

/// Online estimation over every frame of `file` (truth attached when present).
EstimateRun estimate_sequence(const AppConfig& cfg, const ShapeRegressor& model, const SequenceFile& file);

EstimateRun cmd_estimate(const AppConfig& cfg, const std::filesystem::path& model_path,
                         const std::filesystem::path& sequence_path, const std::filesystem::path& out_csv,
                         std::ostream& log);

/// Throws InvalidInput unless every frame carries truth.
EvaluationReport evaluate_sequence(const AppConfig& cfg, const ShapeRegressor& model, const SequenceFile& file,
                                   std::vector<EstimateFrame>* frames_out = nullptr);

/// Writes the report as JSON to `report_out` (and the estimates when
/// `estimates_out` is non-empty).
EvaluationReport cmd_evaluate(const AppConfig& cfg, const std::filesystem::path& model_path,
                              const std::filesystem::path& sequence_path, const std::filesystem::path& report_out,
                              const std::filesystem::path& estimates_out, std::ostream& log);

struct LooSummary {
    std::vector<EvaluationReport> folds;
    double aggregate_mean_error = 0.0;
    double aggregate_baseline_error = 0.0;
    nlohmann::json to_json() const;
};

/// All leave-one-out folds. Fold k trains on every sequence but k and writes
/// fold-k/{model.txt, estimates.csv, report.json}; summary.json holds the
/// per-fold table and the frame-weighted aggregates.
LooSummary cmd_loo(const AppConfig& cfg, std::span<const std::filesystem::path> sequences,
                   const std::filesystem::path& out_dir, std::ostream& log);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace colondef
