#include "tipgrade/run_store.hpp"

#include "tipgrade/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace tipgrade {
namespace {

using nlohmann::json;

json rubric_to_json(const RubricText& rubric) {
    return json{{"origin", rubric.origin == RubricOrigin::Fixed ? "fixed" : "generated"},
                {"tiers", rubric.tiers}};
}

RubricText rubric_from_json(const json& j) {
    RubricText rubric;
    rubric.origin = j.at("origin").get<std::string>() == "fixed" ? RubricOrigin::Fixed
                                                                 : RubricOrigin::Generated;
    const auto& tiers = j.at("tiers");
    if (!tiers.is_array() || tiers.size() != 5) {
        throw StoreError("rubric record must carry exactly five tiers");
    }
    for (std::size_t i = 0; i < 5; ++i) {
        rubric.tiers[i] = tiers[i].get<std::string>();
    }
    return rubric;
}

json record_to_json(const EvaluationRecord& record) {
    json j{{"kind", "record"},
           {"question_id", record.question_id},
           {"student_id", record.student_id},
           {"method", method_id(record.method)},
           {"model_name", record.model_name},
           {"score", record.score},
           {"explanation", record.explanation},
           {"transcript_refs", record.transcript_refs},
           {"status", record_status_name(record.status)}};
    if (record.criteria_flags) {
        j["criteria_flags"] = {{"c1", record.criteria_flags->c1},
                               {"c2", record.criteria_flags->c2},
                               {"c3", record.criteria_flags->c3}};
        j["reported_mismatch"] = record.reported_mismatch;
    }
    if (record.reported_score) {
        j["reported_score"] = *record.reported_score;
    }
    if (record.rubric_used) {
        j["rubric_used"] = rubric_to_json(*record.rubric_used);
    }
    return j;
}

EvaluationRecord record_from_json(const json& j) {
    EvaluationRecord record;
    record.question_id = j.at("question_id").get<std::string>();
    record.student_id = j.at("student_id").get<std::string>();
    const std::string method = j.at("method").get<std::string>();
    const auto parsed = method_from_id(method);
    if (!parsed) {
        throw StoreError("unknown method in run store: " + method);
    }
    record.method = *parsed;
    record.model_name = j.at("model_name").get<std::string>();
    record.score = j.at("score").get<int>();
    record.explanation = j.at("explanation").get<std::string>();
    record.transcript_refs = j.at("transcript_refs").get<std::vector<std::string>>();
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok") {
        record.status = RecordStatus::Ok;
    } else if (status == "overflow") {
        record.status = RecordStatus::Overflow;
    } else if (status == "parse_failed") {
        record.status = RecordStatus::ParseFailed;
    } else {
        throw StoreError("unknown record status in run store: " + status);
    }
    if (j.contains("criteria_flags")) {
        CriteriaFlags flags;
        flags.c1 = j["criteria_flags"].at("c1").get<bool>();
        flags.c2 = j["criteria_flags"].at("c2").get<bool>();
        flags.c3 = j["criteria_flags"].at("c3").get<bool>();
        record.criteria_flags = flags;
        record.reported_mismatch = j.value("reported_mismatch", false);
    }
    if (j.contains("reported_score")) {
        record.reported_score = j["reported_score"].get<int>();
    }
    if (j.contains("rubric_used")) {
        record.rubric_used = rubric_from_json(j["rubric_used"]);
    }
    return record;
}

json plan_to_json(const RunPlan& plan) {
    json methods = json::array();
    for (Method m : plan.methods) {
        methods.push_back(method_id(m));
    }
    json models = json::array();
    for (const ModelSpec& m : plan.models) {
        models.push_back({{"name", m.name},
                          {"role", m.role == ModelRole::JudgeLM ? "judgelm" : "general"},
                          {"temperature", m.params.temperature},
                          {"max_completion_tokens", m.params.max_completion_tokens},
                          {"budget_limit", m.budget.limit},
                          {"counter_id", m.budget.counter_id},
                          {"completion_headroom", m.budget.completion_headroom}});
    }
    return json{{"methods", std::move(methods)},
                {"models", std::move(models)},
                {"retry_limit", plan.retry_limit}};
}

RunPlan plan_from_json(const json& j) {
    RunPlan plan;
    for (const auto& m : j.at("methods")) {
        const auto method = method_from_id(m.get<std::string>());
        if (!method) {
            throw StoreError("unknown method in manifest: " + m.get<std::string>());
        }
        plan.methods.push_back(*method);
    }
    for (const auto& m : j.at("models")) {
        ModelSpec spec;
        spec.name = m.at("name").get<std::string>();
        spec.role = m.at("role").get<std::string>() == "judgelm" ? ModelRole::JudgeLM
                                                                 : ModelRole::General;
        spec.params.model_name = spec.name;
        spec.params.temperature = m.at("temperature").get<double>();
        spec.params.max_completion_tokens = m.at("max_completion_tokens").get<int>();
        spec.budget.limit = m.at("budget_limit").get<int>();
        spec.budget.counter_id = m.at("counter_id").get<std::string>();
        spec.budget.completion_headroom = m.at("completion_headroom").get<int>();
        plan.models.push_back(std::move(spec));
    }
    plan.retry_limit = j.at("retry_limit").get<int>();
    return plan;
}

json manifest_to_json(const RunManifest& manifest) {
    return json{{"kind", "manifest"},
                {"format", "tipgrade-run"},
                {"version", 1},
                {"plan", plan_to_json(manifest.plan)},
                {"counter_id", manifest.counter_id},
                {"templates", manifest.template_digests},
                {"transcript_store_digest", manifest.transcript_store_digest}};
}

RunManifest manifest_from_json(const json& j) {
    RunManifest manifest;
    manifest.plan = plan_from_json(j.at("plan"));
    manifest.counter_id = j.at("counter_id").get<std::string>();
    manifest.template_digests =
        j.at("templates").get<std::map<std::string, std::string>>();
    manifest.transcript_store_digest = j.at("transcript_store_digest").get<std::string>();
    return manifest;
}

} // namespace

void validate_plan(const RunPlan& plan) {
    if (plan.methods.empty()) {
        throw ConfigError("run plan has no methods");
    }
    if (plan.models.empty()) {
        throw ConfigError("run plan has no models");
    }
    if (plan.retry_limit < 0) {
        throw ConfigError("retry_limit must be non-negative");
    }
    if (plan.concurrency_limit < 1) {
        throw ConfigError("concurrency_limit must be at least 1");
    }
    const bool wants_judgelm = std::any_of(plan.methods.begin(), plan.methods.end(),
                                           [](Method m) { return m == Method::JudgeLM; });
    const bool wants_general = std::any_of(plan.methods.begin(), plan.methods.end(),
                                           [](Method m) { return m != Method::JudgeLM; });
    const bool has_judgelm = std::any_of(plan.models.begin(), plan.models.end(),
                                         [](const ModelSpec& m) { return m.role == ModelRole::JudgeLM; });
    const bool has_general = std::any_of(plan.models.begin(), plan.models.end(),
                                         [](const ModelSpec& m) { return m.role == ModelRole::General; });
    if (wants_judgelm && !has_judgelm) {
        throw ConfigError("plan includes the judgelm method but no judgelm-role model");
    }
    if (wants_general && !has_general) {
        throw ConfigError("plan includes general methods but no general-role model");
    }
    for (const ModelSpec& m : plan.models) {
        if (m.name.empty()) {
            throw ConfigError("model entry with empty name");
        }
        if (m.params.temperature < 0) {
            throw ConfigError("model " + m.name + ": temperature must be >= 0");
        }
        if (m.params.max_completion_tokens < 1) {
            throw ConfigError("model " + m.name + ": max_completion_tokens must be >= 1");
        }
        if (m.budget.limit < 1) {
            throw ConfigError("model " + m.name + ": budget limit must be positive");
        }
    }
}

RunStore RunStore::create_or_resume(const std::filesystem::path& path,
                                    const RunManifest& manifest) {
    if (std::filesystem::exists(path)) {
        RunStore store = load(path);
        const std::string existing = manifest_to_json(store.manifest_).dump();
        const std::string requested = manifest_to_json(manifest).dump();
        if (existing != requested) {
            throw StoreError(path.string() +
                             ": run store manifest does not match the requested plan; "
                             "use a fresh run store path");
        }
        return store;
    }
    RunStore store;
    store.path_ = path;
    store.manifest_ = manifest;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StoreError("cannot create run store: " + path.string());
    }
    out << manifest_to_json(manifest).dump() << '\n';
    if (!out) {
        throw StoreError("write failed: " + path.string());
    }
    return store;
}

RunStore RunStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError("cannot open run store: " + path.string());
    }
    RunStore store;
    store.path_ = path;
    std::string line;
    std::size_t line_no = 0;
    bool saw_manifest = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw StoreError(path.string() + ": malformed line " + std::to_string(line_no));
        }
        const std::string kind = j.value("kind", "");
        if (kind == "manifest") {
            store.manifest_ = manifest_from_json(j);
            saw_manifest = true;
        } else if (kind == "record") {
            EvaluationRecord record = record_from_json(j);
            const std::string key = record.cell_key();
            if (!store.finalized_.insert(key).second) {
                throw StoreError(path.string() + ": duplicate record for cell at line " +
                                 std::to_string(line_no));
            }
            store.records_.push_back(std::move(record));
        } else {
            throw StoreError(path.string() + ": unknown record kind \"" + kind + "\" at line " +
                             std::to_string(line_no));
        }
    }
    if (!saw_manifest) {
        throw StoreError(path.string() + ": missing manifest header");
    }
    return store;
}

bool RunStore::finalized(const std::string& cell_key) const {
    return finalized_.find(cell_key) != finalized_.end();
}

void RunStore::append(const EvaluationRecord& record) {
    const std::string key = record.cell_key();
    if (finalized_.find(key) != finalized_.end()) {
        throw StoreError("cell already finalized: " + key);
    }
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) {
        throw StoreError("cannot append to run store: " + path_.string());
    }
    out << record_to_json(record).dump() << '\n';
    if (!out) {
        throw StoreError("write failed: " + path_.string());
    }
    finalized_.insert(key);
    records_.push_back(record);
}

std::map<std::string, RubricText> load_rubrics(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError("cannot open rubric file: " + path.string());
    }
    std::map<std::string, RubricText> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || j.value("kind", "") != "rubric") {
            throw StoreError(path.string() + ": malformed rubric line " + std::to_string(line_no));
        }
        out.emplace(j.at("question_id").get<std::string>(), rubric_from_json(j));
    }
    return out;
}

void save_rubrics(const std::map<std::string, RubricText>& rubrics,
                  const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StoreError("cannot write rubric file: " + path.string());
    }
    for (const auto& [question_id, rubric] : rubrics) {
        json j = rubric_to_json(rubric);
        j["kind"] = "rubric";
        j["question_id"] = question_id;
        out << j.dump() << '\n';
    }
    if (!out) {
        throw StoreError("write failed: " + path.string());
    }
}

} // namespace tipgrade
