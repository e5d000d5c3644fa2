#pragma once

#include "tipgrade/dataset.hpp"
#include "tipgrade/rubric.hpp"
#include "tipgrade/templates.hpp"

#include <cstddef>
#include <string>
#include <string_view>

namespace tipgrade {

enum class PromptKind {
    JudgeLM,
    ReferenceAided,
    NoReference,
    Additive,
    CriteriaGeneration,
    AdaptiveEvaluation,
};

/// A rendered prompt. JudgeLM carries its whole block in user_text with an
/// empty system_text; every other kind fills both.
struct PromptPair {
    PromptKind kind = PromptKind::ReferenceAided;
    std::string system_text;
    std::string user_text;
};

/// Token accounting for one model. counter_id selects the counting scheme;
/// completion_headroom is reserved for the model's reply inside the limit.
struct TokenBudget {
    int limit = 2048;
    std::string counter_id = "chars-div-4";
    int completion_headroom = 256;
};

struct BudgetCheck {
    bool fits = true;
    std::size_t excess = 0;   // tokens over the limit; 0 when fits
};

/// Deterministic token estimate for text under the budget's counter.
/// The default "chars-div-4" counter is ceil(bytes / 4). Throws ConfigError
/// for an unknown counter_id.
std::size_t estimate_tokens(std::string_view text, const TokenBudget& budget);

/// Fits iff estimate(system) + estimate(user) + completion_headroom <= limit.
BudgetCheck check_budget(const PromptPair& prompt, const TokenBudget& budget);

/// Renders the evaluation prompts by literal slot substitution over a
/// template set. Substituted values are never rescanned, so student text
/// containing {slot}-shaped substrings passes through untouched.
class PromptRenderer {
public:
    explicit PromptRenderer(const TemplateSet& templates = TemplateSet::builtin())
        : templates_(&templates) {}

    /// Single-block pair-format prompt: the reference answer is presented as
    /// Student 1 with a pre-filled score of 4 and the model continues with
    /// the score for Student 2. The lesson context is deliberately absent.
    PromptPair judgelm(const QuestionItem& question, const StudentAnswer& answer) const;

    /// System prompt embeds the rubric tiers; user prompt carries
    /// [Context], [Question], [Reference Answer], [Student Answer].
    PromptPair reference_aided(const QuestionItem& question, const StudentAnswer& answer,
                               const RubricText& rubric) const;

    /// Same as reference_aided minus every reference-answer block.
    PromptPair no_reference(const QuestionItem& question, const StudentAnswer& answer,
                            const RubricText& rubric) const;

    /// Fixed three-criterion checklist (correctness 2, clarity 1,
    /// explanation 1); user prompt is the no-reference one.
    PromptPair additive(const QuestionItem& question, const StudentAnswer& answer) const;

    /// Step one of adaptive grading: asks for a question-specific numbered
    /// rubric. No student answer appears anywhere in the pair.
    PromptPair criteria_generation(const QuestionItem& question) const;

    /// Step two: reference_aided layout with the generated rubric in the
    /// system prompt. Requires rubric.origin == Generated.
    PromptPair adaptive(const QuestionItem& question, const StudentAnswer& answer,
                        const RubricText& rubric) const;

    const TemplateSet& templates() const noexcept { return *templates_; }

private:
    const TemplateSet* templates_;
};

/// True when any known {slot} marker survives in the text; renders must
/// leave none.
bool contains_slot_marker(std::string_view text);

} // namespace tipgrade
