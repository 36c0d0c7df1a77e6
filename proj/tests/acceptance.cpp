// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "colondef/commands.hpp"
#include "colondef/errors.hpp"
#include "oracles/cart_oracle.hpp"
#include "support.hpp"

using namespace colondef;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const std::filesystem::path& work_dir() {
    static const std::filesystem::path dir = testing::temp_dir("acceptance");
    return dir;
}

nlohmann::json fixture() {
    std::ifstream in(std::filesystem::path(COLONDEF_FIXTURES) / "loo_default.json");
    return nlohmann::json::parse(in);
}

AppConfig default_config() {
    AppConfig cfg;
    cfg.seed = fixture().at("seed").get<std::uint64_t>();
    cfg.sequences = fixture().at("sequences").get<std::size_t>();
    return cfg;
}

const PathList& default_sequences() {
    static const PathList files = [] {
        std::ostringstream log;
        return cmd_simulate(default_config(), work_dir() / "seqs", log).files;
    }();
    return files;
}

Dataset random_dataset(std::uint64_t key, std::size_t n, std::size_t dim) {
    CounterRng rng(key);
    Dataset data(dim);
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x) v = static_cast<double>(rng.below(9)) * 0.25 + 0.01 * static_cast<double>(rng.below(3));
        data.add(x, Point3(x[0] * x[0] + rng.normal(), x[dim - 1] - rng.normal(), rng.normal()));
    }
    return data;
}

// 1: optimized trees against the exhaustive oracle.
Outcome forest_oracle() {
    const auto start = Clock::now();
    std::size_t mismatches = 0;
    const std::size_t datasets = 25;
    for (std::uint64_t k = 0; k < datasets; ++k) {
        CounterRng rng(derive_key(1, {k}));
        const std::size_t n = 5 + rng.below(46);
        const std::size_t dim = 1 + rng.below(6);
        const std::size_t depth = rng.below(3);
        const std::size_t leaf = 1 + rng.below(3);
        const Dataset data = random_dataset(derive_key(2, {k}), n, dim);
        ForestParams p;
        p.n_trees = 1;
        p.max_depth = depth;
        p.min_samples_leaf = leaf;
        p.mtry = dim;
        p.bootstrap = false;
        const Tree tree = train_tree(data, p, derive_key(3, {k}));
        const auto ref = oracle::train(data, leaf, depth);
        bool ok = oracle::same_structure(*ref, tree);
        std::vector<double> x(dim);
        for (std::size_t i = 0; i < n + 50; ++i) {
            if (i < n) {
                x.assign(data.row(i).begin(), data.row(i).end());
            } else {
                for (auto& v : x) v = 2.5 * rng.uniform() - 0.2;
            }
            ok = ok && (tree.predict(x) - oracle::predict(*ref, x)).norm() <= 1e-12;
        }
        mismatches += ok ? 0 : 1;
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && secs < 10.0, std::to_string(datasets) + " datasets, " + std::to_string(mismatches) +
                                                " mismatches, " + fmt("%.2f s", secs)};
}

std::vector<std::vector<double>> g_icp_traces;

// 2: ICP recovery of random rigid motions of a 30-point curve.
Outcome icp_recovery() {
    const auto start = Clock::now();
    const auto curve = testing::closed_test_curve(30);
    const std::size_t trials = 100;
    double worst_clean = 0.0;
    std::vector<double> noisy;
    for (std::uint64_t k = 0; k < trials; ++k) {
        CounterRng rng(derive_key(20, {k}));
        const auto motion = testing::random_transform(rng, std::numbers::pi / 6, 10.0);
        const auto moved = apply_transform(motion, curve);
        const auto r = icp(moved, curve);
        g_icp_traces.push_back(r.rmsd_trace);
        worst_clean = std::max({worst_clean, r.final_rmsd, rmsd(apply_transform(r.transform, moved), curve)});

        PointList jittered = moved;
        for (auto& p : jittered) p += testing::gaussian_point(rng, 0.5);
        const auto rn = icp(jittered, curve);
        g_icp_traces.push_back(rn.rmsd_trace);
        noisy.push_back(rn.final_rmsd);
    }
    std::sort(noisy.begin(), noisy.end());
    const double p95 = noisy[noisy.size() * 95 / 100 - 1];
    const double secs = seconds_since(start);
    return {worst_clean < 1e-6 && p95 <= 1.0 && secs < 10.0,
            std::to_string(trials) + " transforms, worst noise-free rmsd " + fmt("%.3g mm", worst_clean) +
                ", noisy p95 " + fmt("%.3f mm", p95) + ", " + fmt("%.2f s", secs)};
}

LooSummary g_loo;

// 3: leave-one-insertion-out with default parameters.
Outcome leave_one_out() {
    const auto fx = fixture();
    const auto& files = default_sequences();
    std::ostringstream log;
    const auto start = Clock::now();
    g_loo = cmd_loo(default_config(), files, work_dir() / "loo-a", log);
    const double secs = seconds_since(start);
    bool every_fold = true;
    std::string folds;
    for (const auto& f : g_loo.folds) {
        every_fold = every_fold && f.overall_mean_error < f.baseline_overall_mean_error;
        folds += fmt(" %.3f", f.overall_mean_error) + "/" + fmt("%.3f", f.baseline_overall_mean_error);
    }
    const double ratio = g_loo.aggregate_mean_error / g_loo.aggregate_baseline_error;
    const double max_ratio = fx.at("max_aggregate_ratio").get<double>();
    const double max_secs = fx.at("max_runtime_seconds").get<double>();
    return {every_fold && ratio <= max_ratio && secs < max_secs,
            std::to_string(g_loo.folds.size()) + " folds (model/baseline mm:" + folds + "), aggregate " +
                fmt("%.3f", g_loo.aggregate_mean_error) + "/" + fmt("%.3f mm", g_loo.aggregate_baseline_error) +
                ", ratio " + fmt("%.4f", ratio) + " (limit " + fmt("%.2f", max_ratio) + "), " + fmt("%.1f s", secs)};
}

// 4: a second run with the same seed is byte-identical.
Outcome determinism() {
    std::ostringstream log;
    cmd_loo(default_config(), default_sequences(), work_dir() / "loo-b", log);
    std::size_t compared = 0;
    std::size_t differing = 0;
    const auto a = work_dir() / "loo-a";
    const auto b = work_dir() / "loo-b";
    for (const auto& entry : std::filesystem::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(entry.path(), a);
        ++compared;
        if (!std::filesystem::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) ++differing;
    }
    return {compared == 7 * 3 + 1 && differing == 0,
            std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ"};
}

// 5: invariant suites.
Outcome invariants() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };

    // Bounding boxes, from the first fold's model and its training sequences.
    const auto& files = default_sequences();
    const ShapeRegressor model = load_model(work_dir() / "loo-a" / "fold-1" / "model.txt");
    std::vector<Point3> lo(12, Point3::Constant(1e300));
    std::vector<Point3> hi(12, Point3::Constant(-1e300));
    for (std::size_t k = 1; k < files.size(); ++k) {
        for (const auto& f : load_sequence(files[k]).frames) {
            for (std::size_t m = 0; m < 12; ++m) {
                lo[m] = lo[m].cwiseMin((*f.colon)[m]);
                hi[m] = hi[m].cwiseMax((*f.colon)[m]);
            }
        }
    }
    auto inside = [&](const ColonShape& c) {
        for (std::size_t m = 0; m < c.size(); ++m) {
            if ((c[m].array() < lo[m].array()).any() || (c[m].array() > hi[m].array()).any()) return false;
        }
        return true;
    };
    bool bbox = true;
    CounterRng rng(50);
    for (int i = 0; i < 200; ++i) {
        PointList pts;
        for (int j = 0; j < 6; ++j) pts.push_back(testing::gaussian_point(rng, 500.0));
        bbox = bbox && inside(estimate_colon_shape(model, ScopeShape(pts)));
    }
    const auto held = estimate_sequence(default_config(), model, load_sequence_file(files[0]));
    for (const auto& f : held.frames) bbox = bbox && inside(f.estimate);
    check(bbox, "bbox");

    // Smoother fixed point and linearity.
    bool smoother = true;
    std::vector<ColonShape> xs, ys, mix;
    for (std::uint64_t t = 0; t < 12; ++t) {
        xs.emplace_back(testing::random_points(derive_key(60, {t}), 12));
        ys.emplace_back(testing::random_points(derive_key(61, {t}), 12));
        PointList q;
        for (std::size_t m = 0; m < 12; ++m) q.push_back(1.7 * xs.back()[m] - 3.0 * ys.back()[m]);
        mix.emplace_back(q);
    }
    for (std::size_t len = 1; len <= xs.size(); ++len) {
        const SmootherParams p{5};
        const auto a = smooth_estimates(std::span<const ColonShape>(xs.data(), len), p);
        const auto b = smooth_estimates(std::span<const ColonShape>(ys.data(), len), p);
        const auto c = smooth_estimates(std::span<const ColonShape>(mix.data(), len), p);
        const auto fixed = smooth_estimates(std::vector<ColonShape>(len, xs[0]), p);
        for (std::size_t m = 0; m < 12; ++m) {
            smoother = smoother && (c[m] - (1.7 * a[m] - 3.0 * b[m])).norm() < 1e-9;
            smoother = smoother && (fixed[m] - xs[0][m]).norm() < 1e-12;
        }
    }
    check(smoother, "smoother");

    // ICP RMSD monotonicity, on the recovery runs and on registrations of
    // a default sequence against the centerline.
    bool monotone = true;
    auto trace_ok = [](const std::vector<double>& t) {
        for (std::size_t k = 1; k < t.size(); ++k) {
            if (t[k] > t[k - 1] + 1e-12) return false;
        }
        return true;
    };
    for (const auto& t : g_icp_traces) monotone = monotone && trace_ok(t);
    const auto centerline = generate_phantom({}).centerline;
    for (const auto& f : load_sequence(files[0]).frames) {
        try {
            monotone = monotone && trace_ok(icp(f.scope.points(), centerline).rmsd_trace);
        } catch (const DegenerateGeometry&) {
        }
    }
    check(monotone, "icp-monotone");

    // Simulator displacement bound and the kappa = 0 rest shape.
    const Phantom ph = generate_phantom({});
    bool bound = true;
    InsertionConfig ins;
    ins.noise_sigma_marker = 0.0;
    ins.noise_sigma_scope = 0.0;
    for (double kappa : {0.25, 0.5, 1.0}) {
        ins.coupling_strength = kappa;
        for (std::size_t t = 0; t < ins.n_frames; ++t) {
            const auto f = simulate_clean_frame(ph, ins, tip_depth(ins, ph.length(), t));
            for (std::size_t m = 0; m < f.markers.size(); ++m) {
                bound = bound && (f.markers[m] - ph.rest_colon[m]).norm() <= ins.max_marker_displacement + 1e-9;
            }
        }
    }
    check(bound, "displacement-bound");
    ins.coupling_strength = 0.0;
    bool rest = true;
    for (const auto& f : simulate_insertion(ph, ins).frames) rest = rest && f.colon->points() == ph.rest_colon.points();
    check(rest, "kappa0-rest");

    // Lossless round-trips.
    save_model(work_dir() / "roundtrip.txt", model);
    const auto back = load_model(work_dir() / "roundtrip.txt");
    bool model_ok = back == model;
    for (int i = 0; i < 100; ++i) {
        PointList pts;
        for (int j = 0; j < 6; ++j) pts.push_back(testing::gaussian_point(rng, 300.0));
        model_ok = model_ok && estimate_colon_shape(back, ScopeShape(pts)) == estimate_colon_shape(model, ScopeShape(pts));
    }
    check(model_ok, "model-roundtrip");
    const auto seq_file = load_sequence_file(files[0]);
    save_sequence(work_dir() / "roundtrip.seq", seq_file.sequence, seq_file.simulator);
    check(slurp(work_dir() / "roundtrip.seq") == slurp(files[0]) &&
              load_sequence(work_dir() / "roundtrip.seq") == seq_file.sequence,
          "sequence-roundtrip");

    std::string detail = "bbox, smoother, icp-monotone, displacement-bound, kappa0-rest, model-roundtrip, sequence-roundtrip";
    if (!failed.empty()) {
        detail = "failed:";
        for (const auto& f : failed) detail += " " + f;
    }
    return {failed.empty(), detail};
}

// 6: training on six default sequences.
Outcome protocol() {
    const auto& files = default_sequences();
    std::ostringstream log;
    const PathList six(files.begin(), files.begin() + 6);
    const auto s = cmd_train(default_config(), six, work_dir() / "six.txt", log);
    const bool all_100 =
        std::all_of(s.trees_per_regressor.begin(), s.trees_per_regressor.end(), [](std::size_t n) { return n == 100; });
    const auto model = load_model(work_dir() / "six.txt");
    const bool saved = model.markers() == 12 && model.forests()[11].trees().size() == 100;
    return {s.regressors == 12 && all_100 && saved,
            std::to_string(s.regressors) + " regressors x " +
                std::to_string(s.trees_per_regressor.empty() ? 0 : s.trees_per_regressor.front()) + " trees, " +
                std::to_string(s.training_frames) + " frames"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"1 forest matches exhaustive CART", forest_oracle},
        {"2 ICP recovery", icp_recovery},
        {"3 leave-one-insertion-out", leave_one_out},
        {"4 determinism", determinism},
        {"5 invariant suites", invariants},
        {"6 protocol: 12 regressors x 100 trees", protocol},
    };
    bool all = true;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << name << "] " << o.detail << std::endl;
    }
    std::filesystem::remove_all(work_dir());
    return all ? 0 : 1;
}
