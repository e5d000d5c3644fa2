#include "tipgrade/prompts.hpp"

#include "tipgrade/errors.hpp"

#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <utility>

namespace tipgrade {
namespace {

constexpr const char* kSlotNames[] = {
    "{context}", "{question}", "{reference_answer}", "{student_answer}",
    "{criteria}", "{reference}", "{answer}",
};

using Slot = std::pair<std::string_view, std::string_view>;

// Single pass over the template: each known slot occurrence is replaced by
// its value, and substituted values are never rescanned.
std::string substitute(std::string_view tmpl, std::initializer_list<Slot> slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t brace = tmpl.find('{', pos);
        if (brace == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, brace - pos));
        const Slot* match = nullptr;
        for (const Slot& s : slots) {
            if (tmpl.compare(brace, s.first.size(), s.first) == 0) {
                match = &s;
                break;
            }
        }
        if (match != nullptr) {
            out.append(match->second);
            pos = brace + match->first.size();
        } else {
            out.push_back('{');
            pos = brace + 1;
        }
    }
    return out;
}

void require_complete(const RubricText& rubric, const char* where) {
    if (!rubric.complete()) {
        throw std::invalid_argument(std::string(where) + ": rubric must have five non-empty tiers");
    }
}

} // namespace

std::size_t estimate_tokens(std::string_view text, const TokenBudget& budget) {
    if (budget.counter_id == "chars-div-4") {
        return (text.size() + 3) / 4;
    }
    throw ConfigError("unknown token counter: " + budget.counter_id);
}

BudgetCheck check_budget(const PromptPair& prompt, const TokenBudget& budget) {
    const std::size_t total = estimate_tokens(prompt.system_text, budget) +
                              estimate_tokens(prompt.user_text, budget) +
                              static_cast<std::size_t>(budget.completion_headroom);
    const auto limit = static_cast<std::size_t>(budget.limit);
    if (total <= limit) {
        return {true, 0};
    }
    return {false, total - limit};
}

PromptPair PromptRenderer::judgelm(const QuestionItem& question, const StudentAnswer& answer) const {
    PromptPair pair;
    pair.kind = PromptKind::JudgeLM;
    pair.user_text = substitute(templates_->text("judgelm"),
                                {{"{question}", question.question_text},
                                 {"{reference}", question.reference_answer},
                                 {"{answer}", answer.answer_text}});
    return pair;
}

PromptPair PromptRenderer::reference_aided(const QuestionItem& question, const StudentAnswer& answer,
                                           const RubricText& rubric) const {
    require_complete(rubric, "reference_aided");
    PromptPair pair;
    pair.kind = PromptKind::ReferenceAided;
    pair.system_text = substitute(templates_->text("reference_aided_system"),
                                  {{"{criteria}", rubric.numbered_list()}});
    pair.user_text = substitute(templates_->text("reference_aided_user"),
                                {{"{context}", question.context},
                                 {"{question}", question.question_text},
                                 {"{reference_answer}", question.reference_answer},
                                 {"{student_answer}", answer.answer_text}});
    return pair;
}

PromptPair PromptRenderer::no_reference(const QuestionItem& question, const StudentAnswer& answer,
                                        const RubricText& rubric) const {
    require_complete(rubric, "no_reference");
    PromptPair pair;
    pair.kind = PromptKind::NoReference;
    pair.system_text = substitute(templates_->text("no_reference_system"),
                                  {{"{criteria}", rubric.numbered_list()}});
    pair.user_text = substitute(templates_->text("no_reference_user"),
                                {{"{context}", question.context},
                                 {"{question}", question.question_text},
                                 {"{student_answer}", answer.answer_text}});
    return pair;
}

PromptPair PromptRenderer::additive(const QuestionItem& question, const StudentAnswer& answer) const {
    PromptPair pair;
    pair.kind = PromptKind::Additive;
    pair.system_text = templates_->text("additive_system");
    pair.user_text = substitute(templates_->text("no_reference_user"),
                                {{"{context}", question.context},
                                 {"{question}", question.question_text},
                                 {"{student_answer}", answer.answer_text}});
    return pair;
}

PromptPair PromptRenderer::criteria_generation(const QuestionItem& question) const {
    PromptPair pair;
    pair.kind = PromptKind::CriteriaGeneration;
    pair.system_text = templates_->text("criteria_generation_system");
    pair.user_text = substitute(templates_->text("criteria_generation_user"),
                                {{"{context}", question.context},
                                 {"{question}", question.question_text},
                                 {"{reference_answer}", question.reference_answer}});
    return pair;
}

PromptPair PromptRenderer::adaptive(const QuestionItem& question, const StudentAnswer& answer,
                                    const RubricText& rubric) const {
    if (rubric.origin != RubricOrigin::Generated) {
        throw std::invalid_argument("adaptive: rubric must be Generated, not Fixed");
    }
    require_complete(rubric, "adaptive");
    PromptPair pair;
    pair.kind = PromptKind::AdaptiveEvaluation;
    pair.system_text = substitute(templates_->text("adaptive_system"),
                                  {{"{criteria}", rubric.numbered_list()}});
    pair.user_text = substitute(templates_->text("reference_aided_user"),
                                {{"{context}", question.context},
                                 {"{question}", question.question_text},
                                 {"{reference_answer}", question.reference_answer},
                                 {"{student_answer}", answer.answer_text}});
    return pair;
}

bool contains_slot_marker(std::string_view text) {
    for (const char* slot : kSlotNames) {
        if (text.find(slot) != std::string_view::npos) {
            return true;
        }
    }
    return false;
}

} // namespace tipgrade
