#include "colondef/commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "colondef/errors.hpp"
#include "colondef/random.hpp"

namespace colondef {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::vector<SequenceFile> load_all(std::span<const std::filesystem::path> paths) {
    if (paths.empty()) throw InvalidInput("no sequence files given");
    std::vector<SequenceFile> files;
    files.reserve(paths.size());
    for (const auto& p : paths) files.push_back(load_sequence_file(p));
    for (std::size_t i = 1; i < files.size(); ++i) {
        if (files[i].sequence.scope_points() != files[0].sequence.scope_points()) {
            throw InvalidInput(paths[i].string() + " has " + std::to_string(files[i].sequence.scope_points()) +
                               " scope points but " + paths[0].string() + " has " +
                               std::to_string(files[0].sequence.scope_points()));
        }
        if (files[i].sequence.markers() != files[0].sequence.markers()) {
            throw InvalidInput(paths[i].string() + " has " + std::to_string(files[i].sequence.markers()) +
                               " markers but " + paths[0].string() + " has " +
                               std::to_string(files[0].sequence.markers()));
        }
    }
    return files;
}

EstimatorConfig estimator_config(const AppConfig& cfg) {
    EstimatorConfig ec;
    ec.forest = cfg.forest;
    ec.forest.seed = cfg.seed;
    ec.features = cfg.features;
    ec.threads = cfg.threads;
    return ec;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

SimulateSummary cmd_simulate(const AppConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
    validate_config(cfg);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    const Phantom phantom = generate_phantom(cfg.phantom);
    SimulateSummary summary;
    summary.frames_per_sequence = cfg.insertion.n_frames;
    for (std::size_t k = 1; k <= cfg.sequences; ++k) {
        InsertionConfig ins = cfg.insertion;
        char id[32];
        std::snprintf(id, sizeof(id), "insertion-%02zu", k);
        ins.id = id;
        ins.seed = derive_key(cfg.seed, {k});
        const InsertionSequence seq = simulate_insertion(phantom, ins);
        const json echo = {{"phantom", phantom_to_json(cfg.phantom)}, {"insertion", insertion_to_json(ins)}};
        const auto path = out_dir / (ins.id + ".seq");
        save_sequence(path, seq, echo.dump());
        summary.files.push_back(path);
        log << "wrote " << path.string() << " (" << seq.frames.size() << " frames, " << seq.scope_points()
            << " scope points, " << seq.markers() << " markers)\n";
    }
    log << "simulated " << summary.files.size() << " insertions, colon length " << fixed(phantom.length(), 2)
        << " mm\n";
    return summary;
}

PointList registration_target(const AppConfig& cfg, const SequenceFile& file) {
    if (!cfg.registration.enabled) return {};
    if (cfg.registration.reference) return load_points(*cfg.registration.reference);
    if (!file.simulator) {
        throw InvalidInput("sequence " + file.sequence.id +
                           " carries no phantom description; pass a registration reference or disable registration");
    }
    json echo;
    try {
        echo = json::parse(*file.simulator);
    } catch (const json::exception& e) {
        throw ParseError("sequence " + file.sequence.id + ": simulator header is not valid JSON: " + e.what(), 1);
    }
    if (!echo.is_object() || !echo.contains("phantom")) {
        throw ParseError("sequence " + file.sequence.id + ": simulator header has no phantom section", 1);
    }
    return generate_phantom(phantom_from_json(echo.at("phantom"))).centerline;
}

std::vector<InsertionSequence> prepare_training(const AppConfig& cfg, std::span<const SequenceFile> files,
                                                std::size_t* held) {
    std::vector<InsertionSequence> out;
    out.reserve(files.size());
    std::size_t held_total = 0;
    std::map<std::string, PointList> targets;
    for (const auto& f : files) {
        out.push_back(f.sequence);
        if (!cfg.registration.enabled || !cfg.registration.register_training) continue;
        const std::string key = f.simulator.value_or("");
        auto it = targets.find(key);
        if (it == targets.end()) it = targets.emplace(key, registration_target(cfg, f)).first;
        held_total += register_sequence(out.back(), it->second, cfg.registration.icp, cfg.registration.on_degenerate);
    }
    if (held) *held = held_total;
    return out;
}

ShapeRegressor train_model(const AppConfig& cfg, std::span<const SequenceFile> files, TrainSummary* summary) {
    validate_config(cfg);
    std::size_t held = 0;
    const auto training = prepare_training(cfg, files, &held);
    ShapeRegressor model = train_shape_regressor(training, estimator_config(cfg));
    if (summary) {
        summary->regressors = model.markers();
        summary->trees_per_regressor.clear();
        for (const auto& f : model.forests()) summary->trees_per_regressor.push_back(f.trees().size());
        summary->training_frames = model.metadata().training_frames;
        summary->sequence_ids = model.metadata().sequence_ids;
        summary->held_registrations = held;
    }
    return model;
}

TrainSummary cmd_train(const AppConfig& cfg, std::span<const std::filesystem::path> sequences,
                       const std::filesystem::path& model_out, std::ostream& log) {
    validate_config(cfg);
    const auto files = load_all(sequences);
    for (const auto& f : files) {
        const auto report = validate_sequence(f.sequence, cfg.validation);
        if (!report.clean()) {
            log << "warning: " << f.sequence.id << ": " << report.issues.size() << " validation issues, first at frame "
                << report.issues.front().frame << ": " << report.issues.front().message << "\n";
        }
    }
    TrainSummary summary;
    const ShapeRegressor model = train_model(cfg, files, &summary);
    save_model(model_out, model);

    if (summary.training_frames < 2 * cfg.forest.min_samples_leaf) {
        log << "warning: only " << summary.training_frames << " training frames; every tree is a single leaf\n";
    }
    for (std::size_t m = 0; m < summary.regressors; ++m) {
        log << "regressor " << m << ": " << summary.training_frames << " training samples, "
            << summary.trees_per_regressor[m] << " trees\n";
    }
    log << "trained " << summary.regressors << " regressors x " << cfg.forest.n_trees << " trees on "
        << summary.sequence_ids.size() << " sequences (" << summary.training_frames << " frames)";
    if (summary.held_registrations > 0) log << ", " << summary.held_registrations << " frames held registration";
    log << "\nmodel written to " << model_out.string() << "\n";
    return summary;
}

EstimateRun estimate_sequence(const AppConfig& cfg, const ShapeRegressor& model, const SequenceFile& file) {
    validate_config(cfg);
    const auto& seq = file.sequence;
    if (seq.scope_points() != model.scope_points()) {
        throw InvalidInput("sequence " + seq.id + " has " + std::to_string(seq.scope_points()) +
                           " scope points, model expects " + std::to_string(model.scope_points()));
    }
    OnlineEstimator online(model, registration_target(cfg, file), cfg.registration.icp, cfg.smoother,
                           cfg.registration.on_degenerate);
    EstimateRun run;
    run.frames.reserve(seq.frames.size());
    for (const auto& f : seq.frames) {
        auto out = online.push(f.scope);
        if (out.registration_held) ++run.held_registrations;
        run.frames.push_back(EstimateFrame{f.scope, std::move(out.smoothed), f.colon});
    }
    return run;
}

EstimateRun cmd_estimate(const AppConfig& cfg, const std::filesystem::path& model_path,
                         const std::filesystem::path& sequence_path, const std::filesystem::path& out_csv,
                         std::ostream& log) {
    validate_config(cfg);
    const ShapeRegressor model = load_model(model_path);
    const SequenceFile file = load_sequence_file(sequence_path);
    EstimateRun run = estimate_sequence(cfg, model, file);
    export_estimates(out_csv, run.frames);
    log << "estimated " << run.frames.size() << " frames of " << file.sequence.id << " (window "
        << cfg.smoother.window << ")";
    if (run.held_registrations > 0) log << ", " << run.held_registrations << " frames held registration";
    log << "\nestimates written to " << out_csv.string() << "\n";
    return run;
}

EvaluationReport evaluate_sequence(const AppConfig& cfg, const ShapeRegressor& model, const SequenceFile& file,
                                   std::vector<EstimateFrame>* frames_out) {
    const auto& seq = file.sequence;
    for (const auto& f : seq.frames) {
        if (!f.colon) {
            throw InvalidInput("sequence " + seq.id + " frame " + std::to_string(f.index) + " has no colon shape");
        }
    }
    EstimateRun run = estimate_sequence(cfg, model, file);
    std::vector<ColonShape> estimates;
    std::vector<ColonShape> truth;
    estimates.reserve(run.frames.size());
    truth.reserve(run.frames.size());
    for (const auto& f : run.frames) {
        estimates.push_back(f.estimate);
        truth.push_back(*f.truth);
    }
    EvaluationReport report = evaluate_estimates(estimates, truth, model.baseline_shape());
    report.sequence_id = seq.id;
    report.held_registrations = run.held_registrations;
    report.config = config_to_json(cfg);
    if (frames_out) *frames_out = std::move(run.frames);
    return report;
}

EvaluationReport cmd_evaluate(const AppConfig& cfg, const std::filesystem::path& model_path,
                              const std::filesystem::path& sequence_path, const std::filesystem::path& report_out,
                              const std::filesystem::path& estimates_out, std::ostream& log) {
    validate_config(cfg);
    const ShapeRegressor model = load_model(model_path);
    const SequenceFile file = load_sequence_file(sequence_path);
    std::vector<EstimateFrame> frames;
    EvaluationReport report = evaluate_sequence(cfg, model, file, &frames);
    write_text_file(report_out, dump(report_to_json(report)));
    if (!estimates_out.empty()) export_estimates(estimates_out, frames);
    log << "sequence " << report.sequence_id << ": model " << fixed(report.overall_mean_error) << " mm, baseline "
        << fixed(report.baseline_overall_mean_error) << " mm over " << report.frames << " frames\n";
    log << "report written to " << report_out.string() << "\n";
    return report;
}

json LooSummary::to_json() const {
    json folds_doc = json::array();
    for (std::size_t k = 0; k < folds.size(); ++k) {
        const auto& r = folds[k];
        folds_doc.push_back({{"fold", k + 1},
                             {"sequence", r.sequence_id},
                             {"frames", r.frames},
                             {"mean_error_mm", r.overall_mean_error},
                             {"baseline_mean_error_mm", r.baseline_overall_mean_error},
                             {"held_registrations", r.held_registrations}});
    }
    return {{"folds", folds_doc},
            {"aggregate_mean_error_mm", aggregate_mean_error},
            {"aggregate_baseline_error_mm", aggregate_baseline_error},
            {"ratio", aggregate_mean_error / aggregate_baseline_error}};
}

LooSummary cmd_loo(const AppConfig& cfg, std::span<const std::filesystem::path> sequences,
                   const std::filesystem::path& out_dir, std::ostream& log) {
    validate_config(cfg);
    const auto files = load_all(sequences);
    if (files.size() < 2) throw InvalidInput("leave-one-out needs at least 2 sequences");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    LooSummary summary;
    double weighted = 0.0;
    double weighted_baseline = 0.0;
    std::size_t total_frames = 0;
    log << "fold  sequence            frames   model_mm  baseline_mm\n";
    for (std::size_t k = 0; k < files.size(); ++k) {
        std::vector<SequenceFile> training;
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (i != k) training.push_back(files[i]);
        }
        const ShapeRegressor model = train_model(cfg, training);
        std::vector<EstimateFrame> frames;
        EvaluationReport report = evaluate_sequence(cfg, model, files[k], &frames);

        const auto dir = out_dir / ("fold-" + std::to_string(k + 1));
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        save_model(dir / "model.txt", model);
        export_estimates(dir / "estimates.csv", frames);
        write_text_file(dir / "report.json", dump(report_to_json(report)));

        char line[160];
        std::snprintf(line, sizeof(line), "%4zu  %-18s %7zu %10.3f %12.3f\n", k + 1, report.sequence_id.c_str(),
                      report.frames, report.overall_mean_error, report.baseline_overall_mean_error);
        log << line << std::flush;

        weighted += report.overall_mean_error * static_cast<double>(report.frames);
        weighted_baseline += report.baseline_overall_mean_error * static_cast<double>(report.frames);
        total_frames += report.frames;
        summary.folds.push_back(std::move(report));
    }
    summary.aggregate_mean_error = weighted / static_cast<double>(total_frames);
    summary.aggregate_baseline_error = weighted_baseline / static_cast<double>(total_frames);
    json doc = summary.to_json();
    doc["config"] = config_to_json(cfg);
    write_text_file(out_dir / "summary.json", dump(doc));
    log << "aggregate: model " << fixed(summary.aggregate_mean_error) << " mm, baseline "
        << fixed(summary.aggregate_baseline_error) << " mm, ratio "
        << fixed(summary.aggregate_mean_error / summary.aggregate_baseline_error) << "\n";
    return summary;
}

}  // namespace colondef
