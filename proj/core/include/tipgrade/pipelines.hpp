#pragma once

#include "tipgrade/dataset.hpp"
#include "tipgrade/llm_client.hpp"
#include "tipgrade/parsing.hpp"
#include "tipgrade/prompts.hpp"
#include "tipgrade/records.hpp"
#include "tipgrade/run_store.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace tipgrade {

/// Maps model names to the backend answering their requests. Replay runs
/// register one shared backend for every model; live runs register one
/// HTTP backend per endpoint.
class BackendSet {
public:
    void add(const std::string& model_name, std::shared_ptr<ClientBackend> backend);
    ClientBackend& for_model(const std::string& model_name) const;

private:
    std::map<std::string, std::shared_ptr<ClientBackend>> backends_;
};

/// Wire mapping of a rendered prompt: the JudgeLM block travels as a single
/// user message, every other kind as a system + user pair.
ChatRequest to_chat_request(const PromptPair& prompt, const SamplingParams& params);

/// Per-cell evaluation context: which model, its budget, and how many fresh
/// samples to draw after a parse failure.
struct EvalContext {
    const PromptRenderer* renderer = nullptr;
    ClientBackend* client = nullptr;
    SamplingParams params;
    TokenBudget budget;
    int retry_limit = 2;
};

/// Pair-format evaluation. Overflowing prompts are finalized as sentinel
/// records without any model call.
EvaluationRecord evaluate_judgelm(const QuestionItem& question, const StudentAnswer& answer,
                                  const EvalContext& ctx);

/// Reference-aided or no-reference evaluation with a five-tier rubric.
/// method must be ReferenceAided or NoReference.
EvaluationRecord evaluate_scored(Method method, const QuestionItem& question,
                                 const StudentAnswer& answer, const RubricText& rubric,
                                 const EvalContext& ctx);

/// Checklist evaluation; the final score is recomputed from the criterion
/// flags and any disagreement with the model's own total is flagged.
EvaluationRecord evaluate_additive(const QuestionItem& question, const StudentAnswer& answer,
                                   const EvalContext& ctx);

struct RubricOutcome {
    std::optional<RubricText> rubric;               // absent after persistent parse failure
    std::vector<std::string> transcript_refs;
    std::optional<ParseFailure> failure;
};

/// Step one of adaptive evaluation: one generated rubric per question.
RubricOutcome generate_rubric(const QuestionItem& question, const EvalContext& ctx);

/// Step two: reference-aided layout under the generated rubric.
EvaluationRecord evaluate_adaptive(const QuestionItem& question, const StudentAnswer& answer,
                                   const RubricText& rubric, const EvalContext& ctx);

struct RunSummary {
    std::size_t total_cells = 0;
    std::size_t skipped = 0;       // already finalized before this invocation
    std::size_t ok = 0;
    std::size_t overflow = 0;
    std::size_t parse_failed = 0;
};

using ProgressFn = std::function<void(const RunSummary& so_far)>;

struct RunOptions {
    /// Pre-generated rubrics by question_id; when present, adaptive cells
    /// never call criteria generation.
    std::optional<std::map<std::string, RubricText>> rubrics;
    ProgressFn progress;
};

/// Executes every (answer x method x model) cell of the plan that is not
/// already finalized in the store. Cells run on a bounded worker pool but
/// finalize in canonical order, so the resulting store is identical at any
/// concurrency. Adaptive cells of one question share a single generated
/// rubric per model. A transport failure stops finalization at the first
/// unfinished cell and rethrows; the store stays valid for resume.
RunSummary run_batch(const Dataset& dataset, const RunPlan& plan, RunStore& store,
                     const BackendSet& backends, const PromptRenderer& renderer,
                     const RunOptions& options = {});

} // namespace tipgrade
