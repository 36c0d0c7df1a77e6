// colondef: simulate, train, estimate, evaluate and leave-one-out runs.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "colondef/commands.hpp"
#include "colondef/errors.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigFailure = 2,
    kParseFailure = 3,
    kDegenerate = 4,
    kInvalidInput = 5,
};

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    // simulator
    std::optional<std::size_t> sequences;
    std::optional<std::size_t> frames;
    std::optional<double> kappa;
    std::optional<double> lambda;
    std::optional<double> noise_scope;
    std::optional<double> noise_marker;
    // forest
    std::optional<std::size_t> n_trees;
    std::optional<std::size_t> leaf_size;
    std::optional<std::size_t> mtry;
    std::optional<std::size_t> max_depth;
    bool no_bootstrap = false;
    // online estimation
    std::optional<std::size_t> window;
    std::optional<std::string> reference;
    bool no_registration = false;
};

colondef::AppConfig resolve_config(const Overrides& o) {
    colondef::AppConfig cfg;
    std::optional<std::string> path = o.config;
    if (!path) {
        if (const char* env = std::getenv(colondef::kConfigEnvVar); env && *env) path = env;
    }
    if (path) cfg = colondef::load_config(*path);

    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.sequences) cfg.sequences = *o.sequences;
    if (o.frames) cfg.insertion.n_frames = *o.frames;
    if (o.kappa) cfg.insertion.coupling_strength = *o.kappa;
    if (o.lambda) cfg.insertion.coupling_decay = *o.lambda;
    if (o.noise_scope) cfg.insertion.noise_sigma_scope = *o.noise_scope;
    if (o.noise_marker) cfg.insertion.noise_sigma_marker = *o.noise_marker;
    if (o.n_trees) cfg.forest.n_trees = *o.n_trees;
    if (o.leaf_size) cfg.forest.min_samples_leaf = *o.leaf_size;
    if (o.mtry) cfg.forest.mtry = *o.mtry;
    if (o.max_depth) cfg.forest.max_depth = *o.max_depth;
    if (o.no_bootstrap) cfg.forest.bootstrap = false;
    if (o.window) cfg.smoother.window = *o.window;
    if (o.reference) cfg.registration.reference = *o.reference;
    if (o.no_registration) cfg.registration.enabled = false;
    colondef::validate_config(cfg);
    return cfg;
}

void add_forest_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--n-trees", o.n_trees, "Trees per marker forest");
    cmd->add_option("--leaf-size", o.leaf_size, "Minimum samples per leaf");
    cmd->add_option("--mtry", o.mtry, "Candidate features per split");
    cmd->add_option("--max-depth", o.max_depth, "Maximum tree depth");
    cmd->add_flag("--no-bootstrap", o.no_bootstrap, "Train every tree on all rows");
}

void add_online_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--window", o.window, "Causal smoothing window (frames)");
    cmd->add_option("--reference", o.reference, "Points file used as the registration target");
    cmd->add_flag("--no-registration", o.no_registration, "Skip ICP registration");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Colon shape estimation from colonoscope shape"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config,
                   std::string("JSON config file (default: $") + colondef::kConfigEnvVar + ")");
    app.add_option("--seed", o.seed, "Master seed");
    app.add_option("--threads", o.threads, "Training threads (0 = all cores)");

    std::string out_dir;
    auto* simulate = app.add_subcommand("simulate", "Write simulated insertion sequences");
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--sequences", o.sequences, "Number of insertions");
    simulate->add_option("--frames", o.frames, "Frames per insertion");
    simulate->add_option("--kappa", o.kappa, "Coupling strength");
    simulate->add_option("--lambda", o.lambda, "Coupling decay length (mm)");
    simulate->add_option("--noise-scope", o.noise_scope, "Scope noise sigma (mm)");
    simulate->add_option("--noise-marker", o.noise_marker, "Marker noise sigma (mm)");

    std::vector<std::string> sequence_paths;
    std::string model_path;
    auto* train = app.add_subcommand("train", "Train per-marker forests");
    train->add_option("sequences", sequence_paths, "Training sequence files")->required();
    train->add_option("--model", model_path, "Output model file")->required();
    add_forest_flags(train, o);
    train->add_option("--reference", o.reference, "Points file used as the registration target");
    train->add_flag("--no-registration", o.no_registration, "Skip ICP registration");

    std::string sequence_path;
    std::string out_path;
    auto* estimate = app.add_subcommand("estimate", "Estimate colon shapes for a sequence");
    estimate->add_option("--model", model_path, "Model file")->required();
    estimate->add_option("--sequence", sequence_path, "Sequence file")->required();
    estimate->add_option("--out", out_path, "Output estimates CSV")->required();
    add_online_flags(estimate, o);

    std::string estimates_path;
    auto* evaluate = app.add_subcommand("evaluate", "Score a model on a sequence with truth");
    evaluate->add_option("--model", model_path, "Model file")->required();
    evaluate->add_option("--sequence", sequence_path, "Sequence file")->required();
    evaluate->add_option("--report", out_path, "Output report (JSON)")->required();
    evaluate->add_option("--estimates", estimates_path, "Also write the estimates CSV");
    add_online_flags(evaluate, o);

    auto* loo = app.add_subcommand("loo", "Leave-one-insertion-out evaluation");
    loo->add_option("sequences", sequence_paths, "All sequence files")->required();
    loo->add_option("--out", out_dir, "Output directory")->required();
    add_forest_flags(loo, o);
    add_online_flags(loo, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigFailure;
    }

    try {
        const colondef::AppConfig cfg = resolve_config(o);
        const std::vector<std::filesystem::path> paths(sequence_paths.begin(), sequence_paths.end());
        if (*simulate) {
            colondef::cmd_simulate(cfg, out_dir, std::cout);
        } else if (*train) {
            colondef::cmd_train(cfg, paths, model_path, std::cout);
        } else if (*estimate) {
            colondef::cmd_estimate(cfg, model_path, sequence_path, out_path, std::cout);
        } else if (*evaluate) {
            colondef::cmd_evaluate(cfg, model_path, sequence_path, out_path, estimates_path, std::cout);
        } else if (*loo) {
            colondef::cmd_loo(cfg, paths, out_dir, std::cout);
        }
        return kOk;
    } catch (const colondef::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigFailure;
    } catch (const colondef::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseFailure;
    } catch (const colondef::UnsupportedVersion& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseFailure;
    } catch (const colondef::StructuralIntegrity& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseFailure;
    } catch (const colondef::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kParseFailure;
    } catch (const colondef::DegenerateGeometry& e) {
        std::cerr << "degenerate geometry: " << e.what() << "\n";
        return kDegenerate;
    } catch (const colondef::InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
