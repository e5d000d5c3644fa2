#include "tipgrade/dataset.hpp"

#include "tipgrade/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace tipgrade {
namespace {

using nlohmann::json;

std::string pair_key(const std::string& question_id, const std::string& student_id) {
    return question_id + '\x1f' + student_id;
}

std::string display_key(const std::string& question_id, const std::string& student_id) {
    return "(" + question_id + ", " + student_id + ")";
}

// Pulls a required string field; records a violation instead of throwing.
bool read_string(const json& j, const char* field, std::string& out,
                 const std::string& key, ValidationReport& report) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
        report.push_back({"missing_field", key,
                          std::string("missing or non-string field \"") + field + "\""});
        return false;
    }
    out = it->get<std::string>();
    return true;
}

struct RawRecords {
    std::vector<QuestionItem> questions;
    std::vector<StudentAnswer> answers;
    std::vector<HumanScore> human_scores;
};

RawRecords read_records(const std::filesystem::path& path, ValidationReport& report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError("cannot open dataset file: " + path.string());
    }

    RawRecords out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string line_key = "line " + std::to_string(line_no);
        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object()) {
            report.push_back({"malformed_record", line_key, "line is not a JSON object"});
            continue;
        }
        std::string kind;
        if (!read_string(j, "kind", kind, line_key, report)) {
            continue;
        }
        if (kind == "question") {
            QuestionItem q;
            bool ok = read_string(j, "question_id", q.question_id, line_key, report);
            ok &= read_string(j, "question_text", q.question_text, line_key, report);
            ok &= read_string(j, "context", q.context, line_key, report);
            ok &= read_string(j, "reference_answer", q.reference_answer, line_key, report);
            if (ok) {
                out.questions.push_back(std::move(q));
            }
        } else if (kind == "answer") {
            StudentAnswer a;
            bool ok = read_string(j, "question_id", a.question_id, line_key, report);
            ok &= read_string(j, "student_id", a.student_id, line_key, report);
            ok &= read_string(j, "answer_text", a.answer_text, line_key, report);
            if (ok) {
                out.answers.push_back(std::move(a));
            }
        } else if (kind == "human_score") {
            HumanScore h;
            bool ok = read_string(j, "question_id", h.question_id, line_key, report);
            ok &= read_string(j, "student_id", h.student_id, line_key, report);
            ok &= read_string(j, "explanation", h.explanation, line_key, report);
            auto score_it = j.find("score");
            if (score_it == j.end() || !score_it->is_number_integer()) {
                report.push_back({"missing_field", line_key, "missing or non-integer field \"score\""});
                ok = false;
            } else {
                h.score = score_it->get<int>();
            }
            if (ok) {
                out.human_scores.push_back(std::move(h));
            }
        } else {
            report.push_back({"unknown_kind", line_key, "unknown record kind \"" + kind + "\""});
        }
    }
    return out;
}

} // namespace

Dataset::Dataset(std::vector<QuestionItem> questions,
                 std::vector<StudentAnswer> answers,
                 std::vector<HumanScore> human_scores)
    : questions_(std::move(questions)),
      answers_(std::move(answers)),
      human_scores_(std::move(human_scores)) {
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        question_index_.emplace(questions_[i].question_id, i);
    }
    for (std::size_t i = 0; i < answers_.size(); ++i) {
        answer_index_.emplace(pair_key(answers_[i].question_id, answers_[i].student_id), i);
    }
    for (std::size_t i = 0; i < human_scores_.size(); ++i) {
        human_index_.emplace(pair_key(human_scores_[i].question_id, human_scores_[i].student_id), i);
    }
}

const QuestionItem* Dataset::find_question(const std::string& question_id) const {
    auto it = question_index_.find(question_id);
    return it == question_index_.end() ? nullptr : &questions_[it->second];
}

const StudentAnswer* Dataset::find_answer(const std::string& question_id,
                                          const std::string& student_id) const {
    auto it = answer_index_.find(pair_key(question_id, student_id));
    return it == answer_index_.end() ? nullptr : &answers_[it->second];
}

const HumanScore* Dataset::find_human_score(const std::string& question_id,
                                            const std::string& student_id) const {
    auto it = human_index_.find(pair_key(question_id, student_id));
    return it == human_index_.end() ? nullptr : &human_scores_[it->second];
}

std::vector<const StudentAnswer*> Dataset::answers_for_question(const std::string& question_id) const {
    std::vector<const StudentAnswer*> out;
    for (const auto& a : answers_) {
        if (a.question_id == question_id) {
            out.push_back(&a);
        }
    }
    return out;
}

ValidationReport validate_dataset(const Dataset& dataset) {
    ValidationReport report;

    std::unordered_set<std::string> question_ids;
    for (const auto& q : dataset.questions()) {
        if (!question_ids.insert(q.question_id).second) {
            report.push_back({"duplicate_question_id", q.question_id, "question_id appears more than once"});
        }
        if (q.question_text.empty()) {
            report.push_back({"empty_question_text", q.question_id, "question_text is empty"});
        }
        if (q.context.empty()) {
            report.push_back({"empty_context", q.question_id, "context is empty"});
        }
        if (q.reference_answer.empty()) {
            report.push_back({"empty_reference_answer", q.question_id, "reference_answer is empty"});
        }
    }

    std::unordered_set<std::string> answer_keys;
    for (const auto& a : dataset.answers()) {
        const std::string key = display_key(a.question_id, a.student_id);
        if (!answer_keys.insert(pair_key(a.question_id, a.student_id)).second) {
            report.push_back({"duplicate_answer_key", key, "answer key appears more than once"});
        }
        if (question_ids.find(a.question_id) == question_ids.end()) {
            report.push_back({"dangling_question_id", key,
                              "answer references unknown question_id " + a.question_id});
        }
    }

    std::unordered_set<std::string> human_keys;
    for (const auto& h : dataset.human_scores()) {
        const std::string key = display_key(h.question_id, h.student_id);
        if (!human_keys.insert(pair_key(h.question_id, h.student_id)).second) {
            report.push_back({"duplicate_human_score_key", key, "human score key appears more than once"});
        }
        if (h.score < 0 || h.score > 4) {
            report.push_back({"score_out_of_range", key,
                              "score out of [0,4]: " + std::to_string(h.score)});
        }
        if (answer_keys.find(pair_key(h.question_id, h.student_id)) == answer_keys.end()) {
            report.push_back({"dangling_answer_key", key,
                              "human score does not resolve to an answer"});
        }
    }

    return report;
}

LenientLoadResult load_dataset_lenient(const std::filesystem::path& path) {
    LenientLoadResult result;
    RawRecords raw = read_records(path, result.report);
    result.dataset = Dataset(std::move(raw.questions), std::move(raw.answers),
                             std::move(raw.human_scores));
    ValidationReport invariants = validate_dataset(result.dataset);
    result.report.insert(result.report.end(), invariants.begin(), invariants.end());
    return result;
}

Dataset load_dataset(const std::filesystem::path& path) {
    LenientLoadResult result = load_dataset_lenient(path);
    if (!result.report.empty()) {
        const Violation& v = result.report.front();
        std::ostringstream msg;
        msg << path.string() << ": " << v.rule << " at " << v.key << ": " << v.message;
        if (result.report.size() > 1) {
            msg << " (+" << result.report.size() - 1 << " more)";
        }
        throw DatasetError(msg.str());
    }
    return std::move(result.dataset);
}

AttachResult attach_human_scores(const Dataset& dataset, const std::filesystem::path& path) {
    ValidationReport report;
    RawRecords raw = read_records(path, report);
    if (!report.empty()) {
        const Violation& v = report.front();
        throw DatasetError(path.string() + ": " + v.rule + " at " + v.key + ": " + v.message);
    }
    if (!raw.questions.empty() || !raw.answers.empty()) {
        throw DatasetError(path.string() + ": human-score file contains non-score records");
    }

    AttachResult result;
    std::vector<HumanScore> merged = dataset.human_scores();
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        index.emplace(pair_key(merged[i].question_id, merged[i].student_id), i);
    }

    for (auto& h : raw.human_scores) {
        if (h.score < 0 || h.score > 4) {
            throw DatasetError(path.string() + ": score out of [0,4] for " +
                               display_key(h.question_id, h.student_id));
        }
        if (dataset.find_answer(h.question_id, h.student_id) == nullptr) {
            throw DatasetError(path.string() + ": human score key " +
                               display_key(h.question_id, h.student_id) +
                               " does not resolve to an answer");
        }
        auto it = index.find(pair_key(h.question_id, h.student_id));
        if (it != index.end()) {
            merged[it->second] = std::move(h);
            ++result.replaced;
        } else {
            index.emplace(pair_key(h.question_id, h.student_id), merged.size());
            merged.push_back(std::move(h));
            ++result.attached;
        }
    }

    result.dataset = Dataset(dataset.questions(), dataset.answers(), std::move(merged));
    return result;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DatasetError("cannot write dataset file: " + path.string());
    }
    for (const auto& q : dataset.questions()) {
        json j{{"kind", "question"},
               {"question_id", q.question_id},
               {"question_text", q.question_text},
               {"context", q.context},
               {"reference_answer", q.reference_answer}};
        out << j.dump() << '\n';
    }
    for (const auto& a : dataset.answers()) {
        json j{{"kind", "answer"},
               {"question_id", a.question_id},
               {"student_id", a.student_id},
               {"answer_text", a.answer_text}};
        out << j.dump() << '\n';
    }
    for (const auto& h : dataset.human_scores()) {
        json j{{"kind", "human_score"},
               {"question_id", h.question_id},
               {"student_id", h.student_id},
               {"score", h.score},
               {"explanation", h.explanation}};
        out << j.dump() << '\n';
    }
    if (!out) {
        throw DatasetError("write failed: " + path.string());
    }
}

} // namespace tipgrade
