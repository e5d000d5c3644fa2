#include "tipgrade/config.hpp"

#include "tipgrade/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace tipgrade {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (known.find(key) == known.end()) {
            throw ConfigError(where + ": unknown key \"" + key + "\"");
        }
    }
}

} // namespace

std::optional<RunMode> run_mode_from_id(const std::string& id) {
    if (id == "live") return RunMode::Live;
    if (id == "record") return RunMode::Record;
    if (id == "replay") return RunMode::Replay;
    return std::nullopt;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError(path.string() + ": config is not a JSON object");
    }
    reject_unknown_keys(j,
                        {"dataset", "methods", "models", "retry_limit", "concurrency",
                         "transcript_store", "run_store", "counter_id", "out", "rubrics"},
                        path.string());

    RunConfig config;
    config.dataset_path = j.value("dataset", "");
    if (j.contains("methods")) {
        for (const auto& m : j["methods"]) {
            const std::string id = m.get<std::string>();
            const auto method = method_from_id(id);
            if (!method) {
                throw ConfigError(path.string() + ": unknown method \"" + id + "\"");
            }
            config.methods.push_back(*method);
        }
    }
    if (j.contains("models")) {
        for (const auto& m : j["models"]) {
            reject_unknown_keys(m,
                                {"name", "role", "base_url", "temperature",
                                 "max_completion_tokens", "budget_limit", "completion_headroom"},
                                path.string() + ": model entry");
            ModelConfig model;
            model.name = m.value("name", "");
            if (model.name.empty()) {
                throw ConfigError(path.string() + ": model entry without a name");
            }
            model.role = m.value("role", "general");
            if (model.role != "general" && model.role != "judgelm") {
                throw ConfigError(path.string() + ": model " + model.name +
                                  ": role must be \"general\" or \"judgelm\"");
            }
            model.base_url = m.value("base_url", "");
            model.temperature = m.value("temperature", 0.2);
            if (model.role == "judgelm") {
                model.max_completion_tokens = m.value("max_completion_tokens", 256);
                model.budget_limit = m.value("budget_limit", 2048);
            } else {
                model.max_completion_tokens = m.value("max_completion_tokens", 1024);
                model.budget_limit = m.value("budget_limit", 8192);
            }
            model.completion_headroom = m.value("completion_headroom", 256);
            config.models.push_back(std::move(model));
        }
    }
    config.retry_limit = j.value("retry_limit", 2);
    config.concurrency = j.value("concurrency", 4);
    config.transcript_store_path = j.value("transcript_store", "");
    config.run_store_path = j.value("run_store", "");
    config.counter_id = j.value("counter_id", "chars-div-4");
    config.output_dir = j.value("out", "");
    config.rubric_path = j.value("rubrics", "");
    return config;
}

RunPlan make_plan(const RunConfig& config) {
    RunPlan plan;
    plan.methods = config.methods;
    plan.retry_limit = config.retry_limit;
    plan.concurrency_limit = config.concurrency;
    for (const ModelConfig& m : config.models) {
        ModelSpec spec;
        spec.name = m.name;
        spec.role = m.role == "judgelm" ? ModelRole::JudgeLM : ModelRole::General;
        spec.params.model_name = m.name;
        spec.params.temperature = m.temperature;
        spec.params.max_completion_tokens = m.max_completion_tokens;
        spec.budget.limit = m.budget_limit;
        spec.budget.counter_id = config.counter_id;
        spec.budget.completion_headroom = m.completion_headroom;
        spec.base_url = m.base_url;
        plan.models.push_back(std::move(spec));
    }
    return plan;
}

} // namespace tipgrade
