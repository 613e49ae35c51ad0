#pragma once

#include <filesystem>
#include <string>

#include "pivotal/grpo.hpp"
#include "pivotal/pgcot.hpp"
#include "pivotal/rewards.hpp"
#include "pivotal/toy_rl.hpp"
#include "pivotal/trace.hpp"

namespace pivotal {

/// Full application configuration, one nested section per sub-config.
/// Stored as JSON; unknown keys are rejected, missing keys keep defaults.
struct AppConfig {
    RewardConfig reward;
    DapoConfig dapo;
    ToyEnvConfig env;
    TrainConfig train;
    TagConfig tags;
    PgcotConfig pgcot;
    std::string lexicon_path;            // empty = built-in lexicon
    std::string behavior_patterns_path;  // empty = built-in patterns

    static AppConfig defaults();

    void validate() const;  // throws Error(ConfigError)
};

/// Parses an AppConfig JSON document. Throws Error(ConfigError) on unknown
/// keys, type mismatches, or invariant violations.
AppConfig parse_app_config(const std::string& json_text);

AppConfig load_app_config(const std::filesystem::path& path);

/// Stable, pretty-printed serialization; parse_app_config round-trips it.
std::string app_config_to_json(const AppConfig& config);

/// Loads the lexicon named by the config (or the built-in default).
PivotalLexicon load_configured_lexicon(const AppConfig& config);

}  // namespace pivotal
