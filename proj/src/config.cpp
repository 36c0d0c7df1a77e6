#include "colondef/config.hpp"

#include <fstream>
#include <set>

#include "colondef/errors.hpp"

namespace colondef {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> known) {
    if (!obj.is_object()) throw ConfigError(section, "must be an object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(section.empty() ? key : section + "." + key, "unknown key");
    }
}

template <class T>
void read(const json& obj, const std::string& section, const char* key, T& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string field = section.empty() ? key : section + "." + key;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw ConfigError(field, "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0)) {
                throw ConfigError(field, "expected a non-negative integer");
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) throw ConfigError(field, "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!it->is_string()) throw ConfigError(field, "expected a string");
        }
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(field, e.what());
    }
}

template <class T>
void read_optional_count(const json& obj, const std::string& section, const char* key, std::optional<T>& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (it->is_null()) {
        out.reset();
        return;
    }
    T value{};
    read(obj, section, key, value);
    out = value;
}

Point3 point_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
        throw ConfigError(field, "expected a point [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json point_to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

const char* policy_name(DegeneratePolicy p) { return p == DegeneratePolicy::Propagate ? "error" : "hold"; }

}  // namespace

json phantom_to_json(const PhantomConfig& c) {
    json curve = json::array();
    for (const auto& p : c.rest_curve) curve.push_back(point_to_json(p));
    return {{"n_centerline_samples", c.n_centerline_samples},
            {"rest_curve", curve},
            {"marker_count", c.marker_count},
            {"scope_point_count", c.scope_point_count},
            {"sensor_spacing", c.sensor_spacing},
            {"surface_radius", c.surface_radius}};
}

PhantomConfig phantom_from_json(const json& doc, PhantomConfig c) {
    const std::string s = "phantom";
    reject_unknown(doc, s,
                   {"n_centerline_samples", "rest_curve", "marker_count", "scope_point_count", "sensor_spacing",
                    "surface_radius"});
    read(doc, s, "n_centerline_samples", c.n_centerline_samples);
    read(doc, s, "marker_count", c.marker_count);
    read(doc, s, "scope_point_count", c.scope_point_count);
    read(doc, s, "sensor_spacing", c.sensor_spacing);
    read(doc, s, "surface_radius", c.surface_radius);
    if (const auto it = doc.find("rest_curve"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("phantom.rest_curve", "expected a list of points");
        c.rest_curve.clear();
        for (std::size_t i = 0; i < it->size(); ++i) {
            c.rest_curve.push_back(point_from_json((*it)[i], "phantom.rest_curve[" + std::to_string(i) + "]"));
        }
    }
    return c;
}

json insertion_to_json(const InsertionConfig& c) {
    return {{"id", c.id},
            {"n_frames", c.n_frames},
            {"frame_rate", c.frame_rate},
            {"direction", c.direction == MotionDirection::Withdrawal ? "withdrawal" : "insertion"},
            {"coupling_strength", c.coupling_strength},
            {"coupling_decay", c.coupling_decay},
            {"max_marker_displacement", c.max_marker_displacement},
            {"noise_sigma_scope", c.noise_sigma_scope},
            {"noise_sigma_marker", c.noise_sigma_marker},
            {"seed", c.seed}};
}

InsertionConfig insertion_from_json(const json& doc, InsertionConfig c) {
    const std::string s = "insertion";
    reject_unknown(doc, s,
                   {"id", "n_frames", "frame_rate", "direction", "coupling_strength", "coupling_decay",
                    "max_marker_displacement", "noise_sigma_scope", "noise_sigma_marker", "seed"});
    read(doc, s, "id", c.id);
    read(doc, s, "n_frames", c.n_frames);
    read(doc, s, "frame_rate", c.frame_rate);
    read(doc, s, "coupling_strength", c.coupling_strength);
    read(doc, s, "coupling_decay", c.coupling_decay);
    read(doc, s, "max_marker_displacement", c.max_marker_displacement);
    read(doc, s, "noise_sigma_scope", c.noise_sigma_scope);
    read(doc, s, "noise_sigma_marker", c.noise_sigma_marker);
    read(doc, s, "seed", c.seed);
    std::string direction = c.direction == MotionDirection::Withdrawal ? "withdrawal" : "insertion";
    read(doc, s, "direction", direction);
    if (direction == "withdrawal") {
        c.direction = MotionDirection::Withdrawal;
    } else if (direction == "insertion") {
        c.direction = MotionDirection::Insertion;
    } else {
        throw ConfigError("insertion.direction", "expected \"withdrawal\" or \"insertion\"");
    }
    return c;
}

json forest_to_json(const ForestParams& p) {
    return {{"n_trees", p.n_trees},
            {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
            {"min_samples_leaf", p.min_samples_leaf},
            {"mtry", p.mtry ? json(*p.mtry) : json(nullptr)},
            {"bootstrap", p.bootstrap},
            {"seed", p.seed}};
}

AppConfig config_from_json(const json& doc, AppConfig c) {
    reject_unknown(doc, "",
                   {"seed", "sequences", "phantom", "insertion", "forest", "features", "smoother", "registration",
                    "validation", "threads"});
    read(doc, "", "seed", c.seed);
    read(doc, "", "sequences", c.sequences);
    read(doc, "", "threads", c.threads);
    if (doc.contains("phantom")) c.phantom = phantom_from_json(doc["phantom"], c.phantom);
    if (doc.contains("insertion")) c.insertion = insertion_from_json(doc["insertion"], c.insertion);
    if (doc.contains("forest")) {
        const auto& f = doc["forest"];
        reject_unknown(f, "forest", {"n_trees", "max_depth", "min_samples_leaf", "mtry", "bootstrap", "seed"});
        read(f, "forest", "n_trees", c.forest.n_trees);
        read_optional_count(f, "forest", "max_depth", c.forest.max_depth);
        read(f, "forest", "min_samples_leaf", c.forest.min_samples_leaf);
        read_optional_count(f, "forest", "mtry", c.forest.mtry);
        read(f, "forest", "bootstrap", c.forest.bootstrap);
        read(f, "forest", "seed", c.forest.seed);
    }
    if (doc.contains("features")) {
        reject_unknown(doc["features"], "features", {"center"});
        read(doc["features"], "features", "center", c.features.center);
    }
    if (doc.contains("smoother")) {
        reject_unknown(doc["smoother"], "smoother", {"window"});
        read(doc["smoother"], "smoother", "window", c.smoother.window);
    }
    if (doc.contains("validation")) {
        reject_unknown(doc["validation"], "validation", {"jump_threshold"});
        read(doc["validation"], "validation", "jump_threshold", c.validation.jump_threshold);
    }
    if (doc.contains("registration")) {
        const auto& r = doc["registration"];
        const std::string s = "registration";
        reject_unknown(r, s,
                       {"enabled", "register_training", "on_degenerate", "max_iterations", "convergence_tol",
                        "initial_transform", "reference"});
        read(r, s, "enabled", c.registration.enabled);
        read(r, s, "register_training", c.registration.register_training);
        read(r, s, "max_iterations", c.registration.icp.max_iterations);
        read(r, s, "convergence_tol", c.registration.icp.convergence_tol);
        std::string policy = policy_name(c.registration.on_degenerate);
        read(r, s, "on_degenerate", policy);
        if (policy == "error") {
            c.registration.on_degenerate = DegeneratePolicy::Propagate;
        } else if (policy == "hold") {
            c.registration.on_degenerate = DegeneratePolicy::HoldLast;
        } else {
            throw ConfigError("registration.on_degenerate", "expected \"error\" or \"hold\"");
        }
        if (const auto it = r.find("reference"); it != r.end()) {
            if (it->is_null()) {
                c.registration.reference.reset();
            } else if (it->is_string()) {
                c.registration.reference = it->get<std::string>();
            } else {
                throw ConfigError("registration.reference", "expected a path string");
            }
        }
        if (const auto it = r.find("initial_transform"); it != r.end()) {
            const std::string field = "registration.initial_transform";
            if (!it->is_object()) throw ConfigError(field, "expected {rotation, translation}");
            reject_unknown(*it, field, {"rotation", "translation"});
            Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
            Eigen::Vector3d trans = Eigen::Vector3d::Zero();
            if (it->contains("rotation")) {
                const auto& rows = (*it)["rotation"];
                if (!rows.is_array() || rows.size() != 3) throw ConfigError(field + ".rotation", "expected 3 rows");
                for (int i = 0; i < 3; ++i) rot.row(i) = point_from_json(rows[i], field + ".rotation").transpose();
            }
            if (it->contains("translation")) trans = point_from_json((*it)["translation"], field + ".translation");
            try {
                c.registration.icp.initial_transform = RigidTransform::from(rot, trans);
            } catch (const InvalidInput& e) {
                throw ConfigError(field, e.what());
            }
        }
    }
    validate_config(c);
    return c;
}

AppConfig load_config(const std::filesystem::path& path, AppConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config", path.string() + ": " + e.what());
    }
    return config_from_json(doc, std::move(base));
}

json config_to_json(const AppConfig& c) {
    const auto& t = c.registration.icp.initial_transform;
    json rotation = json::array();
    for (int i = 0; i < 3; ++i) rotation.push_back(point_to_json(t.rotation().row(i).transpose()));
    json registration = {{"enabled", c.registration.enabled},
                         {"register_training", c.registration.register_training},
                         {"on_degenerate", policy_name(c.registration.on_degenerate)},
                         {"max_iterations", c.registration.icp.max_iterations},
                         {"convergence_tol", c.registration.icp.convergence_tol},
                         {"initial_transform", {{"rotation", rotation}, {"translation", point_to_json(t.translation())}}},
                         {"reference", c.registration.reference ? json(c.registration.reference->string()) : json(nullptr)}};
    return {{"seed", c.seed},
            {"sequences", c.sequences},
            {"phantom", phantom_to_json(c.phantom)},
            {"insertion", insertion_to_json(c.insertion)},
            {"forest", forest_to_json(c.forest)},
            {"features", {{"center", c.features.center}}},
            {"smoother", {{"window", c.smoother.window}}},
            {"registration", registration},
            {"validation", {{"jump_threshold", c.validation.jump_threshold}}},
            {"threads", c.threads}};
}

void validate_config(const AppConfig& c) {
    c.phantom.validate();
    c.insertion.validate();
    if (c.sequences < 1) throw ConfigError("sequences", "must be >= 1");
    if (c.forest.n_trees < 1) throw ConfigError("forest.n_trees", "must be >= 1");
    if (c.forest.min_samples_leaf < 1) throw ConfigError("forest.min_samples_leaf", "must be >= 1");
    if (c.forest.mtry && *c.forest.mtry < 1) throw ConfigError("forest.mtry", "must be >= 1");
    if (c.smoother.window < 1) throw ConfigError("smoother.window", "must be >= 1");
    if (c.registration.icp.max_iterations < 1) throw ConfigError("registration.max_iterations", "must be >= 1");
    if (!(c.registration.icp.convergence_tol > 0.0)) throw ConfigError("registration.convergence_tol", "must be > 0");
    if (!(c.validation.jump_threshold > 0.0)) throw ConfigError("validation.jump_threshold", "must be > 0");
}

}  // namespace colondef
