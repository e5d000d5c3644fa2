#pragma once

#include "tipgrade/dataset.hpp"
#include "tipgrade/llm_client.hpp"
#include "tipgrade/parsing.hpp"
#include "tipgrade/pipelines.hpp"
#include "tipgrade/prompts.hpp"
#include "tipgrade/run_store.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

namespace tipgrade::testing {

inline std::string two_digit(int value) {
    return (value < 10 ? "0" : "") + std::to_string(value);
}

inline QuestionItem make_question(const std::string& id, const std::string& text = "",
                                  const std::string& context = "",
                                  const std::string& reference = "") {
    QuestionItem q;
    q.question_id = id;
    q.question_text = text.empty() ? "Question text for " + id : text;
    q.context = context.empty() ? "Context paragraph for " + id : context;
    q.reference_answer = reference.empty() ? "Reference answer for " + id : reference;
    return q;
}

inline StudentAnswer make_answer(const std::string& qid, const std::string& sid,
                                 const std::string& text) {
    return StudentAnswer{qid, sid, text};
}

/// Unique throwaway directory under the system temp root.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("tipgrade_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct FixtureShape {
    int questions = 10;
    int students = 11;
    std::set<int> oversized;      // linear indices q * students + s with huge answers
    bool human_scores = true;
};

inline int fixture_human_score(int qi, int si) {
    return (qi * 2 + si) % 5;
}

/// Paper-shaped corpus: questions q01..qNN, students s01..sMM, one answer
/// per pair, deterministic texts. Oversized cells carry a ~9000-char answer
/// that busts the 2048-token pair-format budget.
inline Dataset make_fixture_dataset(const FixtureShape& shape = {}) {
    std::vector<QuestionItem> questions;
    std::vector<StudentAnswer> answers;
    std::vector<HumanScore> humans;
    for (int qi = 0; qi < shape.questions; ++qi) {
        const std::string qid = "q" + two_digit(qi + 1);
        QuestionItem q;
        q.question_id = qid;
        q.question_text = "What is the key idea behind concept " + std::to_string(qi + 1) + "?";
        q.context = "Lesson content for " + qid + ": the course material introduces concept " +
                    std::to_string(qi + 1) + " with worked examples and a short discussion of "
                    "common misunderstandings students run into.";
        q.reference_answer = "The key idea behind concept " + std::to_string(qi + 1) +
                             " is stated here with the level of depth a full-score answer needs.";
        questions.push_back(std::move(q));
        for (int si = 0; si < shape.students; ++si) {
            const std::string sid = "s" + two_digit(si + 1);
            const int cell = qi * shape.students + si;
            std::string text;
            if (shape.oversized.count(cell) > 0) {
                text.assign(9000, 'a' + static_cast<char>(cell % 17));
            } else {
                text = "Answer from " + sid + " to " + qid + ": a short explanation mentioning " +
                       std::to_string((qi + si) % 7) + " of the expected points.";
            }
            answers.push_back({qid, sid, std::move(text)});
            if (shape.human_scores) {
                humans.push_back({qid, sid, fixture_human_score(qi, si),
                                  "human rationale for " + qid + "/" + sid});
            }
        }
    }
    return Dataset(std::move(questions), std::move(answers), std::move(humans));
}

/// Deterministic per-cell model score used by the transcript synthesizer.
inline int fixture_model_score(Method method, int qi, int si) {
    return (qi + 2 * si + static_cast<int>(method)) % 5;
}

inline CriteriaFlags fixture_flags(int qi, int si) {
    return CriteriaFlags{(qi + si) % 4 == 0, (qi + si) % 2 == 0, si % 3 == 0};
}

inline RubricText fixture_rubric_for(const QuestionItem& q) {
    RubricText rubric;
    rubric.origin = RubricOrigin::Generated;
    for (int tier = 0; tier < 5; ++tier) {
        rubric.tiers[static_cast<std::size_t>(tier)] =
            "Tier " + std::to_string(tier) + " expectations for " + q.question_id + ".";
    }
    return rubric;
}

inline std::string rubric_completion_for(const QuestionItem& q) {
    const RubricText rubric = fixture_rubric_for(q);
    return rubric.numbered_list() + "\n";
}

inline void add_transcript(TranscriptStore& store, const PromptPair& prompt,
                           const SamplingParams& params, const std::string& content) {
    Transcript t;
    t.request = to_chat_request(prompt, params);
    t.digest = request_digest(t.request);
    t.completion.content = content;
    t.timestamp = "2026-01-01T00:00:00Z";
    store.append(t);
}

inline int question_index(const std::string& qid) { return std::stoi(qid.substr(1)) - 1; }
inline int student_index(const std::string& sid) { return std::stoi(sid.substr(1)) - 1; }

/// Writes one completion per plan cell that fits its budget, plus one
/// criteria-generation completion per (general model, question). Returns
/// the criteria-generation digests.
inline std::vector<std::string> populate_transcripts(TranscriptStore& store,
                                                     const Dataset& dataset, const RunPlan& plan,
                                                     const PromptRenderer& renderer) {
    std::vector<std::string> generation_digests;
    for (const ModelSpec& model : plan.models) {
        for (Method method : plan.methods) {
            const bool judge_cell = method == Method::JudgeLM;
            if (judge_cell != (model.role == ModelRole::JudgeLM)) {
                continue;
            }
            for (const QuestionItem& q : dataset.questions()) {
                const int qi = question_index(q.question_id);
                if (method == Method::Adaptive) {
                    const PromptPair gen = renderer.criteria_generation(q);
                    add_transcript(store, gen, model.params, rubric_completion_for(q));
                    generation_digests.push_back(
                        request_digest(to_chat_request(gen, model.params)));
                }
                for (const StudentAnswer* a : dataset.answers_for_question(q.question_id)) {
                    const int si = student_index(a->student_id);
                    const int score = fixture_model_score(method, qi, si);
                    PromptPair prompt;
                    std::string content;
                    switch (method) {
                        case Method::JudgeLM:
                            prompt = renderer.judgelm(q, *a);
                            content = " " + std::to_string(score) +
                                      "\nPair-format verdict for " + q.question_id + "/" +
                                      a->student_id + ".";
                            break;
                        case Method::ReferenceAided:
                            prompt = renderer.reference_aided(q, *a, fixed_rubric());
                            content = "{\"score\": " + std::to_string(score) +
                                      ", \"evaluation\": \"tier " + std::to_string(score) +
                                      " rationale\"}";
                            break;
                        case Method::NoReference:
                            prompt = renderer.no_reference(q, *a, fixed_rubric());
                            content = "{\"score\": " + std::to_string(score) +
                                      ", \"evaluation\": \"tier " + std::to_string(score) +
                                      " rationale without reference\"}";
                            break;
                        case Method::Additive: {
                            prompt = renderer.additive(q, *a);
                            const CriteriaFlags flags = fixture_flags(qi, si);
                            const int recomputed = flags.additive_score();
                            const bool mismatch = (qi + si) % 7 == 3;
                            const int reported = mismatch ? (recomputed + 1) : recomputed;
                            auto b = [](bool v) { return v ? "true" : "false"; };
                            content = std::string("{\"c1\": ") + b(flags.c1) + ", \"c2\": " +
                                      b(flags.c2) + ", \"c3\": " + b(flags.c3) +
                                      ", \"score\": " + std::to_string(reported) +
                                      ", \"evaluation\": \"checklist rationale\"}";
                            break;
                        }
                        case Method::Adaptive:
                            prompt = renderer.adaptive(q, *a, fixture_rubric_for(q));
                            content = "{\"score\": " + std::to_string(score) +
                                      ", \"evaluation\": \"generated-criteria rationale\"}";
                            break;
                    }
                    if (!check_budget(prompt, model.budget).fits) {
                        continue;   // overflow cells are finalized without a call
                    }
                    add_transcript(store, prompt, model.params, content);
                }
            }
        }
    }
    return generation_digests;
}

/// Plan with one judge model and one grader covering all five methods.
inline RunPlan make_fixture_plan(int concurrency = 4) {
    RunPlan plan;
    plan.methods = {Method::JudgeLM, Method::ReferenceAided, Method::NoReference, Method::Additive,
                    Method::Adaptive};
    ModelSpec judge;
    judge.name = "judge-fixture";
    judge.role = ModelRole::JudgeLM;
    judge.params.model_name = judge.name;
    judge.params.temperature = 0.2;
    judge.params.max_completion_tokens = 256;
    judge.budget = TokenBudget{2048, "chars-div-4", 256};
    ModelSpec grader;
    grader.name = "grader-fixture";
    grader.role = ModelRole::General;
    grader.params.model_name = grader.name;
    grader.params.temperature = 0.2;
    grader.params.max_completion_tokens = 1024;
    grader.budget = TokenBudget{16384, "chars-div-4", 256};
    plan.models = {judge, grader};
    plan.retry_limit = 2;
    plan.concurrency_limit = concurrency;
    return plan;
}

/// A backend built from a canned digest->content map or a fallback
/// function; counts calls. Lets tests exercise retry and failure paths
/// without a transcript store.
class ScriptedBackend : public ClientBackend {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;
    explicit ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

    Completion complete(const ChatRequest& request) override {
        ++calls_;
        Completion completion;
        completion.content = responder_(request);
        return completion;
    }

    int calls() const noexcept { return calls_; }

private:
    Responder responder_;
    int calls_ = 0;
};

} // namespace tipgrade::testing
