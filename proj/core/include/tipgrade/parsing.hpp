#pragma once

#include "tipgrade/rubric.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace tipgrade {

enum class ParseStage {
    NoStructureFound,
    BadField,
    OutOfRange,
    EmptyCompletion,
};

struct ParseFailure {
    ParseStage stage = ParseStage::NoStructureFound;
    std::string detail;
    std::string raw_excerpt;   // capped at 2000 chars of the offending input
};

/// Outcome of a parse: a typed value or a ParseFailure, never a clamped or
/// invented value.
template <class T>
class ParseResult {
public:
    ParseResult(T value) : v_(std::move(value)) {}
    ParseResult(ParseFailure failure) : v_(std::move(failure)) {}

    bool ok() const noexcept { return std::holds_alternative<T>(v_); }
    const T& value() const { return std::get<T>(v_); }
    const ParseFailure& failure() const { return std::get<ParseFailure>(v_); }

private:
    std::variant<T, ParseFailure> v_;
};

struct ScoredEvaluation {
    int score = 0;
    std::string evaluation;
    bool missing_rationale = false;   // set when the evaluation field was absent
};

struct AdditiveEvaluation {
    bool c1 = false;
    bool c2 = false;
    bool c3 = false;
    std::optional<int> reported_score;   // as emitted by the model, unreconciled
    std::string evaluation;
};

struct JudgeLMVerdict {
    int reference_score = 4;   // pre-filled in the prompt
    int student_score = 0;
    std::string explanation;
};

/// Delimiters of reasoning traces to discard before structured parsing.
struct ReasoningMarkers {
    std::string open = "<think>";
    std::string close = "</think>";
};

/// Removes every well-formed reasoning block; an unmatched open marker
/// removes through end of text. Everything else is byte-identical.
std::string strip_reasoning(std::string_view raw, const ReasoningMarkers& markers = {});

/// Returns the first balanced top-level {...} span, whether bare, fenced,
/// or surrounded by prose. Braces inside string literals do not count.
ParseResult<std::string> extract_structure(std::string_view text);

/// Score + rationale responses (reference-aided / no-reference / adaptive).
/// Integer-valued reals (3.0) are accepted; out-of-range scores fail rather
/// than clamp. A missing evaluation field yields an empty rationale with
/// missing_rationale set.
ParseResult<ScoredEvaluation> parse_scored(std::string_view raw,
                                           const ReasoningMarkers& markers = {});

/// Additive checklist responses. Criteria accept true/false and yes/no
/// spellings in any case; a missing or non-boolean criterion is a bad_field
/// failure.
ParseResult<AdditiveEvaluation> parse_additive(std::string_view raw,
                                               const ReasoningMarkers& markers = {});

/// Continuation after the pre-filled reference score: the first integer is
/// the student score, the text after its line is the explanation.
ParseResult<JudgeLMVerdict> parse_judgelm(std::string_view completion);

/// Extracts a generated rubric: lines starting "0."--"4.", each index
/// exactly once, surrounding prose discarded.
ParseResult<RubricText> parse_rubric(std::string_view raw,
                                     const ReasoningMarkers& markers = {});

const char* parse_stage_name(ParseStage stage);

} // namespace tipgrade
