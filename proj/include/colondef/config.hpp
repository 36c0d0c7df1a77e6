#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "colondef/estimator.hpp"
#include "colondef/registration.hpp"
#include "colondef/shapes.hpp"
#include "colondef/simulator.hpp"

namespace colondef {

/// Environment variable naming the config file used when none is given on
/// the command line.
inline constexpr const char* kConfigEnvVar = "COLONDEF_CONFIG";

struct RegistrationConfig {
    bool enabled = true;
    /// Also register training scope shapes before fitting, so that the
    /// regressor sees the same registered shapes at training and estimation.
    bool register_training = true;
    DegeneratePolicy on_degenerate = DegeneratePolicy::HoldLast;
    IcpParams icp;
    /// Points file holding the registration target. When unset the target is
    /// rebuilt from the phantom echoed in the sequence header.
    std::optional<std::filesystem::path> reference;
};

struct AppConfig {
    std::uint64_t seed = 2018;
    /// Number of insertions written by `simulate`.
    std::size_t sequences = 7;
    PhantomConfig phantom;
    InsertionConfig insertion;
    ForestParams forest;
    FeatureOptions features;
    SmootherParams smoother;
    RegistrationConfig registration;
    ValidationOptions validation;
    unsigned threads = 0;
};

/// Parses a config document on top of the defaults. Unknown keys and
/// ill-typed or out-of-range values raise ConfigError naming the field.
AppConfig config_from_json(const nlohmann::json& doc, AppConfig base = {});
/// Loads `path`; a missing or unparsable file raises ConfigError.
AppConfig load_config(const std::filesystem::path& path, AppConfig base = {});
/// Complete config echo (the `reference` path is included when set).
nlohmann::json config_to_json(const AppConfig& cfg);

nlohmann::json phantom_to_json(const PhantomConfig& cfg);
PhantomConfig phantom_from_json(const nlohmann::json& doc, PhantomConfig base = {});
nlohmann::json insertion_to_json(const InsertionConfig& cfg);
InsertionConfig insertion_from_json(const nlohmann::json& doc, InsertionConfig base = {});
nlohmann::json forest_to_json(const ForestParams& p);

/// Throws ConfigError for the first invalid section.
void validate_config(const AppConfig& cfg);

}  // namespace colondef
