#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace tipgrade {

/// One gradable question: the text shown to students, the lesson content it
/// was extracted from, and an exemplar answer worth the maximum score.
struct QuestionItem {
    std::string question_id;
    std::string question_text;
    std::string context;
    std::string reference_answer;
};

/// A student's free-text answer, keyed by (question_id, student_id).
/// answer_text is preserved byte-for-byte and may be empty.
struct StudentAnswer {
    std::string question_id;
    std::string student_id;
    std::string answer_text;
};

/// Human baseline score on the 0-4 scale, with rationale.
struct HumanScore {
    std::string question_id;
    std::string student_id;
    int score = 0;
    std::string explanation;
};

struct Violation {
    std::string rule;    // stable rule identifier, e.g. "score_out_of_range"
    std::string key;     // record key or "line N" for file-level problems
    std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Immutable question/answer/human-score corpus. Safe to share across
/// threads once constructed. Collections preserve input order.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<QuestionItem> questions,
            std::vector<StudentAnswer> answers,
            std::vector<HumanScore> human_scores);

    const std::vector<QuestionItem>& questions() const noexcept { return questions_; }
    const std::vector<StudentAnswer>& answers() const noexcept { return answers_; }
    const std::vector<HumanScore>& human_scores() const noexcept { return human_scores_; }

    const QuestionItem* find_question(const std::string& question_id) const;
    const StudentAnswer* find_answer(const std::string& question_id,
                                     const std::string& student_id) const;
    const HumanScore* find_human_score(const std::string& question_id,
                                       const std::string& student_id) const;

    /// Answers belonging to one question, in input order.
    std::vector<const StudentAnswer*> answers_for_question(const std::string& question_id) const;

private:
    std::vector<QuestionItem> questions_;
    std::vector<StudentAnswer> answers_;
    std::vector<HumanScore> human_scores_;
    std::unordered_map<std::string, std::size_t> question_index_;
    std::unordered_map<std::string, std::size_t> answer_index_;
    std::unordered_map<std::string, std::size_t> human_index_;
};

/// Loads a dataset file and rejects it on any violation. Throws DatasetError
/// naming the offending record (with line number for malformed lines).
Dataset load_dataset(const std::filesystem::path& path);

struct LenientLoadResult {
    Dataset dataset;           // every record that could be decoded
    ValidationReport report;   // everything wrong with the file
};

/// Loads as much of a dataset file as possible, collecting violations as
/// data instead of failing. Only an unreadable file throws.
LenientLoadResult load_dataset_lenient(const std::filesystem::path& path);

/// Checks every type invariant over an in-memory dataset. Empty report
/// means valid; violations name the record key and the broken rule.
ValidationReport validate_dataset(const Dataset& dataset);

struct AttachResult {
    Dataset dataset;
    std::size_t attached = 0;   // scores now present
    std::size_t replaced = 0;   // pre-existing scores overwritten
};

/// Merges a human-score file into a dataset. Scores for keys already present
/// are replaced. Throws DatasetError on malformed records or keys that do
/// not resolve to an answer.
AttachResult attach_human_scores(const Dataset& dataset, const std::filesystem::path& path);

/// Serializes a dataset back to the line-delimited record format.
/// load(save(d)) round-trips every field.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

} // namespace tipgrade
