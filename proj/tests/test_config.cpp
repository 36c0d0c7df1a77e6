#include <doctest.h>

#include <fstream>

#include "colondef/config.hpp"
#include "colondef/errors.hpp"
#include "support.hpp"

using namespace colondef;
using nlohmann::json;

namespace {

std::string field_of(const json& doc) {
    try {
        config_from_json(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

}  // namespace

TEST_CASE("defaults") {
    const AppConfig c;
    CHECK(c.sequences == 7);
    CHECK(c.forest.n_trees == 100);
    CHECK(c.forest.min_samples_leaf == 5);
    CHECK(!c.forest.mtry);
    CHECK(c.smoother.window == 5);
    CHECK(c.registration.icp.max_iterations == 50);
    CHECK(c.registration.icp.convergence_tol == 1e-6);
    CHECK(c.insertion.n_frames == 300);
    CHECK(c.insertion.frame_rate == 6.0);
    CHECK(c.phantom.marker_count == 12);
    CHECK(c.phantom.scope_point_count == 6);
    CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("values override defaults section by section") {
    const json doc = {{"seed", 5},
                      {"forest", {{"n_trees", 7}, {"mtry", 3}, {"max_depth", nullptr}}},
                      {"insertion", {{"coupling_strength", 0.25}, {"direction", "insertion"}}},
                      {"smoother", {{"window", 2}}},
                      {"registration", {{"on_degenerate", "error"}, {"enabled", false}}}};
    const AppConfig c = config_from_json(doc);
    CHECK(c.seed == 5);
    CHECK(c.forest.n_trees == 7);
    CHECK(c.forest.mtry == 3u);
    CHECK(c.forest.min_samples_leaf == 5);
    CHECK(c.insertion.coupling_strength == 0.25);
    CHECK(c.insertion.direction == MotionDirection::Insertion);
    CHECK(c.insertion.coupling_decay == 60.0);
    CHECK(c.smoother.window == 2);
    CHECK(c.registration.on_degenerate == DegeneratePolicy::Propagate);
    CHECK(!c.registration.enabled);
}

TEST_CASE("errors name the offending field") {
    CHECK(field_of({{"bogus", 1}}) == "bogus");
    CHECK(field_of({{"forest", {{"n_tree", 1}}}}) == "forest.n_tree");
    CHECK(field_of({{"forest", {{"n_trees", "many"}}}}) == "forest.n_trees");
    CHECK(field_of({{"forest", {{"n_trees", -3}}}}) == "forest.n_trees");
    CHECK(field_of({{"forest", {{"n_trees", 0}}}}) == "forest.n_trees");
    CHECK(field_of({{"insertion", {{"coupling_strength", 2.0}}}}) == "insertion.coupling_strength");
    CHECK(field_of({{"insertion", {{"direction", "sideways"}}}}) == "insertion.direction");
    CHECK(field_of({{"smoother", {{"window", 0}}}}) == "smoother.window");
    CHECK(field_of({{"registration", {{"on_degenerate", "ignore"}}}}) == "registration.on_degenerate");
    CHECK(field_of({{"phantom", {{"sensor_spacing", 0}}}}) == "phantom.sensor_spacing");
    CHECK(field_of({{"phantom", {{"rest_curve", {{1, 2}}}}}}).rfind("phantom.rest_curve", 0) == 0);
    CHECK(field_of(json::array()) != "<none>");
}

TEST_CASE("echo round-trips") {
    AppConfig c;
    c.seed = 99;
    c.forest.mtry = 4;
    c.forest.max_depth = 6;
    c.insertion.noise_sigma_scope = 0.125;
    c.registration.reference = "ref.pts";
    c.registration.icp.initial_transform = RigidTransform::rotation({0, 0, 1}, 0.3) * RigidTransform::translation({1, 2, 3});
    const json doc = config_to_json(c);
    const AppConfig back = config_from_json(doc);
    CHECK(config_to_json(back) == doc);
    CHECK(back.forest == c.forest);
    CHECK(back.insertion == c.insertion);
    CHECK(back.phantom == c.phantom);

    CHECK(phantom_from_json(phantom_to_json(c.phantom)) == c.phantom);
    CHECK(insertion_from_json(insertion_to_json(c.insertion)) == c.insertion);
}

TEST_CASE("load_config") {
    const auto dir = testing::temp_dir("config");
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    {
        std::ofstream(dir / "broken.json") << "{ \"seed\": ";
    }
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    {
        std::ofstream(dir / "ok.json") << R"({"seed": 3, "forest": {"min_samples_leaf": 2}})";
    }
    const auto c = load_config(dir / "ok.json");
    CHECK(c.seed == 3);
    CHECK(c.forest.min_samples_leaf == 2);
    std::filesystem::remove_all(dir);
}
