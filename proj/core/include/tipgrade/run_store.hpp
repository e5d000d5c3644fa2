#pragma once

#include "tipgrade/prompts.hpp"
#include "tipgrade/records.hpp"
#include "tipgrade/llm_client.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace tipgrade {

enum class ModelRole { JudgeLM, General };

/// One model entry in a run: sampling parameters, token budget, and which
/// side of the JudgeLM/general split it serves.
struct ModelSpec {
    std::string name;
    ModelRole role = ModelRole::General;
    SamplingParams params;
    TokenBudget budget;
    std::string base_url;   // consulted in live/record mode only
};

struct RunPlan {
    std::vector<Method> methods;
    std::vector<ModelSpec> models;
    int retry_limit = 2;
    int concurrency_limit = 4;
};

/// Throws ConfigError when the plan cannot be executed: empty methods or
/// models, JudgeLM method without a JudgeLM-role model, or non-JudgeLM
/// methods without a general model.
void validate_plan(const RunPlan& plan);

/// Everything needed to reproduce a run: the plan, the token counters in
/// effect, the template texts (by digest), and the transcript store the run
/// read from. Deliberately carries no timestamp so replay runs are
/// byte-reproducible.
struct RunManifest {
    RunPlan plan;
    std::string counter_id;
    std::map<std::string, std::string> template_digests;
    std::string transcript_store_digest;
};

/// Append-only, resumable log of evaluation records under a manifest
/// header. At most one finalized record exists per cell key; finalization
/// order is the canonical cell order, so two runs of the same plan produce
/// byte-identical files at any concurrency.
class RunStore {
public:
    /// Creates the store file with a manifest header, or resumes an
    /// existing one after verifying its manifest matches.
    static RunStore create_or_resume(const std::filesystem::path& path,
                                     const RunManifest& manifest);

    /// Loads records without a manifest to compare against (report path).
    static RunStore load(const std::filesystem::path& path);

    bool finalized(const std::string& cell_key) const;
    void append(const EvaluationRecord& record);

    const std::vector<EvaluationRecord>& records() const noexcept { return records_; }
    const RunManifest& manifest() const noexcept { return manifest_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    RunManifest manifest_;
    std::vector<EvaluationRecord> records_;
    std::unordered_set<std::string> finalized_;
};

/// Pre-generated rubrics keyed by question_id, as produced by the criteria
/// command. Runs consuming a rubric file make no criteria-generation calls.
std::map<std::string, RubricText> load_rubrics(const std::filesystem::path& path);
void save_rubrics(const std::map<std::string, RubricText>& rubrics,
                  const std::filesystem::path& path);

} // namespace tipgrade
