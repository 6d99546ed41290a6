#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sqakit/core.hpp"
#include "sqakit/gateway.hpp"

namespace sqakit::config {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

enum class Mode { Single, Vote, CrossVal };

Mode mode_from_string(std::string_view s);
std::string_view to_string(Mode mode);

struct CrossValPair {
    std::string left;  // model that re-evaluates its answer
    std::string right; // model whose answer is presented as additional insight
};

struct RunConfig {
    Task task = Task::FaultLocalization;
    Mode mode = Mode::Single;
    std::filesystem::path corpus;
    std::vector<gateway::ModelConfig> models;
    std::vector<std::string> priority; // model ids, most-preferred first
    std::vector<CrossValPair> pairs;
    bool cot = false;
    uint64_t seed = 0;
    gateway::CacheMode cache_mode = gateway::CacheMode::LiveRecord;
    std::filesystem::path cache_dir = "cache";
    std::filesystem::path out_dir = "out";
    int parallelism = 1;
    std::string label = "run";
    std::string template_version_pin; // empty = current templates
    std::string embedding_provider = "identity";
    int validation_rounds = 1;
    int top_hints = 5;
};

/// Declarative config file: a TOML-style subset with `key = value` pairs and
/// `[[model]]` / `[[pair]]` table arrays (strings, integers, floats, bools,
/// flat arrays). Relative paths resolve against the config file location.
RunConfig load_config_file(const std::filesystem::path& path);

/// Resolved priority order: the explicit list when given, otherwise models
/// sorted by ascending priority_rank.
std::vector<std::string> resolved_priority(const RunConfig& config);

/// Throws ConfigError with the first violated constraint.
void validate(const RunConfig& config);

/// Config snapshot for manifests; contains env var names, never secrets.
nlohmann::json config_snapshot(const RunConfig& config);

} // namespace sqakit::config
