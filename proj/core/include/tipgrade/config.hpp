#pragma once

#include "tipgrade/records.hpp"
#include "tipgrade/run_store.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tipgrade {

enum class RunMode { Live, Record, Replay };
std::optional<RunMode> run_mode_from_id(const std::string& id);

/// One "models" entry of the config file. Defaults mirror the reference
/// setup: temperature 0.2 everywhere, a 2048-token budget with 256 tokens
/// of completion headroom for the judge, larger budgets for graders.
struct ModelConfig {
    std::string name;
    std::string role = "general";      // "general" | "judgelm"
    std::string base_url;
    double temperature = 0.2;
    int max_completion_tokens = 1024;
    int budget_limit = 8192;
    int completion_headroom = 256;
};

/// Full run configuration; every field can come from the JSON config file,
/// and path/method/concurrency fields can be overridden by CLI flags.
struct RunConfig {
    std::string dataset_path;
    std::vector<Method> methods;
    std::vector<ModelConfig> models;
    int retry_limit = 2;
    int concurrency = 4;
    std::string transcript_store_path;
    std::string run_store_path;
    std::string counter_id = "chars-div-4";
    std::string output_dir;
    std::string rubric_path;           // optional pre-generated rubrics
};

/// Parses the JSON config file. Unknown keys are rejected so typos fail
/// loudly. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// Builds the executable plan, applying judgelm-role defaults (budget 2048,
/// completion cap 256) when the config did not override them.
RunPlan make_plan(const RunConfig& config);

} // namespace tipgrade
