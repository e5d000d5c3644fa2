#pragma once

#include "tipgrade/rubric.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tipgrade {

/// The five evaluation methods a run can execute.
enum class Method { JudgeLM, ReferenceAided, NoReference, Additive, Adaptive };

/// Canonical id used in files and on the command line ("reference_aided").
const char* method_id(Method method);
/// Display form matching the report tables ("Reference Aided").
const char* method_display_name(Method method);
std::optional<Method> method_from_id(const std::string& id);

enum class RecordStatus { Ok, Overflow, ParseFailed };
const char* record_status_name(RecordStatus status);

/// Score value marking an answer that could not be evaluated; excluded from
/// all statistics.
inline constexpr int kSentinelScore = -1;

struct CriteriaFlags {
    bool c1 = false;
    bool c2 = false;
    bool c3 = false;

    /// Correctness is worth 2 points, clarity 1, explanation 1.
    int additive_score() const noexcept { return 2 * c1 + c2 + c3; }
};

/// One pipeline's verdict on one answer. score is -1 exactly when status is
/// not ok. For Additive records the score is recomputed from the flags; the
/// model's own total is kept in reported_score for inconsistency analysis.
struct EvaluationRecord {
    std::string question_id;
    std::string student_id;
    Method method = Method::ReferenceAided;
    std::string model_name;
    int score = kSentinelScore;
    std::string explanation;
    std::optional<CriteriaFlags> criteria_flags;
    std::optional<int> reported_score;
    bool reported_mismatch = false;
    std::optional<RubricText> rubric_used;
    std::vector<std::string> transcript_refs;   // one digest per model call made
    RecordStatus status = RecordStatus::ParseFailed;

    bool ok() const noexcept { return status == RecordStatus::Ok; }

    /// Composite key identifying the run cell this record finalizes.
    std::string cell_key() const;
};

} // namespace tipgrade
