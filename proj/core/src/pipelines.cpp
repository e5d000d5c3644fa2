#include "tipgrade/pipelines.hpp"

#include "tipgrade/errors.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <future>
#include <mutex>
#include <thread>

namespace tipgrade {

ChatRequest to_chat_request(const PromptPair& prompt, const SamplingParams& params) {
    ChatRequest request;
    if (prompt.kind == PromptKind::JudgeLM) {
        // The pair-format block is a single continuation-style message.
        request.messages.push_back({Role::User, prompt.user_text});
    } else {
        request.messages.push_back({Role::System, prompt.system_text});
        request.messages.push_back({Role::User, prompt.user_text});
    }
    request.params = params;
    return request;
}

namespace {

EvaluationRecord base_record(const QuestionItem& question, const StudentAnswer& answer,
                             Method method, const SamplingParams& params) {
    EvaluationRecord record;
    record.question_id = question.question_id;
    record.student_id = answer.student_id;
    record.method = method;
    record.model_name = params.model_name;
    return record;
}

EvaluationRecord overflow_record(EvaluationRecord record, const BudgetCheck& check,
                                 const TokenBudget& budget) {
    record.status = RecordStatus::Overflow;
    record.score = kSentinelScore;
    record.explanation = "prompt exceeds the " + std::to_string(budget.limit) +
                         "-token budget by " + std::to_string(check.excess) + " tokens";
    return record;
}

EvaluationRecord parse_failed_record(EvaluationRecord record, const ParseFailure& failure) {
    record.status = RecordStatus::ParseFailed;
    record.score = kSentinelScore;
    record.explanation = std::string("unparsable after retries: ") +
                         parse_stage_name(failure.stage) + ": " + failure.detail;
    return record;
}

// Runs the call/parse/retry loop shared by every method. parse_fn returns
// true when it accepted the completion and filled the record.
template <class ParseFn>
EvaluationRecord run_attempts(EvaluationRecord record, const ChatRequest& request,
                              const EvalContext& ctx, ParseFn&& parse_fn) {
    const std::string digest = request_digest(request);
    ParseFailure last_failure;
    const int attempts = 1 + std::max(0, ctx.retry_limit);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        Completion completion;
        try {
            completion = ctx.client->complete(request);
        } catch (const ContextLengthError& e) {
            record.status = RecordStatus::Overflow;
            record.score = kSentinelScore;
            record.explanation = e.what();
            return record;
        }
        record.transcript_refs.push_back(digest);
        if (parse_fn(completion.content, record, last_failure)) {
            record.status = RecordStatus::Ok;
            return record;
        }
    }
    return parse_failed_record(std::move(record), last_failure);
}

} // namespace

void BackendSet::add(const std::string& model_name, std::shared_ptr<ClientBackend> backend) {
    backends_[model_name] = std::move(backend);
}

ClientBackend& BackendSet::for_model(const std::string& model_name) const {
    auto it = backends_.find(model_name);
    if (it == backends_.end()) {
        throw ConfigError("no backend registered for model " + model_name);
    }
    return *it->second;
}

EvaluationRecord evaluate_judgelm(const QuestionItem& question, const StudentAnswer& answer,
                                  const EvalContext& ctx) {
    EvaluationRecord record = base_record(question, answer, Method::JudgeLM, ctx.params);
    const PromptPair prompt = ctx.renderer->judgelm(question, answer);
    const BudgetCheck check = check_budget(prompt, ctx.budget);
    if (!check.fits) {
        return overflow_record(std::move(record), check, ctx.budget);
    }
    const ChatRequest request = to_chat_request(prompt, ctx.params);
    return run_attempts(std::move(record), request, ctx,
                        [](const std::string& content, EvaluationRecord& out, ParseFailure& why) {
                            auto verdict = parse_judgelm(content);
                            if (!verdict.ok()) {
                                why = verdict.failure();
                                return false;
                            }
                            out.score = verdict.value().student_score;
                            out.explanation = verdict.value().explanation;
                            return true;
                        });
}

EvaluationRecord evaluate_scored(Method method, const QuestionItem& question,
                                 const StudentAnswer& answer, const RubricText& rubric,
                                 const EvalContext& ctx) {
    if (method != Method::ReferenceAided && method != Method::NoReference) {
        throw std::invalid_argument("evaluate_scored handles reference_aided and no_reference only");
    }
    EvaluationRecord record = base_record(question, answer, method, ctx.params);
    const PromptPair prompt = method == Method::ReferenceAided
                                  ? ctx.renderer->reference_aided(question, answer, rubric)
                                  : ctx.renderer->no_reference(question, answer, rubric);
    record.rubric_used = rubric;
    const BudgetCheck check = check_budget(prompt, ctx.budget);
    if (!check.fits) {
        return overflow_record(std::move(record), check, ctx.budget);
    }
    const ChatRequest request = to_chat_request(prompt, ctx.params);
    return run_attempts(std::move(record), request, ctx,
                        [](const std::string& content, EvaluationRecord& out, ParseFailure& why) {
                            auto parsed = parse_scored(content);
                            if (!parsed.ok()) {
                                why = parsed.failure();
                                return false;
                            }
                            out.score = parsed.value().score;
                            out.explanation = parsed.value().evaluation;
                            return true;
                        });
}

EvaluationRecord evaluate_additive(const QuestionItem& question, const StudentAnswer& answer,
                                   const EvalContext& ctx) {
    EvaluationRecord record = base_record(question, answer, Method::Additive, ctx.params);
    const PromptPair prompt = ctx.renderer->additive(question, answer);
    const BudgetCheck check = check_budget(prompt, ctx.budget);
    if (!check.fits) {
        return overflow_record(std::move(record), check, ctx.budget);
    }
    const ChatRequest request = to_chat_request(prompt, ctx.params);
    return run_attempts(std::move(record), request, ctx,
                        [](const std::string& content, EvaluationRecord& out, ParseFailure& why) {
                            auto parsed = parse_additive(content);
                            if (!parsed.ok()) {
                                why = parsed.failure();
                                return false;
                            }
                            const AdditiveEvaluation& value = parsed.value();
                            CriteriaFlags flags{value.c1, value.c2, value.c3};
                            out.criteria_flags = flags;
                            // The flag sum is the score by definition; the
                            // model's own total is kept for the
                            // inconsistency analysis.
                            out.score = flags.additive_score();
                            out.reported_score = value.reported_score;
                            out.reported_mismatch =
                                value.reported_score && *value.reported_score != out.score;
                            out.explanation = value.evaluation;
                            return true;
                        });
}

RubricOutcome generate_rubric(const QuestionItem& question, const EvalContext& ctx) {
    const PromptPair prompt = ctx.renderer->criteria_generation(question);
    const ChatRequest request = to_chat_request(prompt, ctx.params);
    const std::string digest = request_digest(request);

    RubricOutcome outcome;
    const int attempts = 1 + std::max(0, ctx.retry_limit);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        Completion completion = ctx.client->complete(request);
        outcome.transcript_refs.push_back(digest);
        auto parsed = parse_rubric(completion.content);
        if (parsed.ok()) {
            outcome.rubric = parsed.value();
            outcome.failure.reset();
            return outcome;
        }
        outcome.failure = parsed.failure();
    }
    return outcome;
}

EvaluationRecord evaluate_adaptive(const QuestionItem& question, const StudentAnswer& answer,
                                   const RubricText& rubric, const EvalContext& ctx) {
    EvaluationRecord record = base_record(question, answer, Method::Adaptive, ctx.params);
    const PromptPair prompt = ctx.renderer->adaptive(question, answer, rubric);
    record.rubric_used = rubric;
    const BudgetCheck check = check_budget(prompt, ctx.budget);
    if (!check.fits) {
        return overflow_record(std::move(record), check, ctx.budget);
    }
    const ChatRequest request = to_chat_request(prompt, ctx.params);
    return run_attempts(std::move(record), request, ctx,
                        [](const std::string& content, EvaluationRecord& out, ParseFailure& why) {
                            auto parsed = parse_scored(content);
                            if (!parsed.ok()) {
                                why = parsed.failure();
                                return false;
                            }
                            out.score = parsed.value().score;
                            out.explanation = parsed.value().evaluation;
                            return true;
                        });
}

namespace {

struct Cell {
    const ModelSpec* model = nullptr;
    Method method = Method::ReferenceAided;
    const QuestionItem* question = nullptr;
    const StudentAnswer* answer = nullptr;
    bool skip = false;   // already finalized in the store
};

struct CellResult {
    std::optional<EvaluationRecord> record;   // empty for skipped cells
    std::exception_ptr error;
    bool done = false;
};

// Shares one generated rubric per (model, question) across workers; the
// first adaptive cell to arrive performs the generation, the rest wait.
class RubricCache {
public:
    RubricCache(const std::optional<std::map<std::string, RubricText>>& preloaded)
        : preloaded_(preloaded) {}

    RubricOutcome resolve(const ModelSpec& model, const QuestionItem& question,
                          const EvalContext& ctx) {
        if (preloaded_) {
            auto it = preloaded_->find(question.question_id);
            if (it != preloaded_->end()) {
                RubricOutcome outcome;
                outcome.rubric = it->second;
                return outcome;
            }
        }
        const std::string key = model.name + '\x1f' + question.question_id;
        std::promise<RubricOutcome> promise;
        std::shared_future<RubricOutcome> future;
        bool generate_here = false;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = entries_.find(key);
            if (it == entries_.end()) {
                future = promise.get_future().share();
                entries_.emplace(key, future);
                generate_here = true;
            } else {
                future = it->second;
            }
        }
        if (generate_here) {
            try {
                promise.set_value(generate_rubric(question, ctx));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return future.get();
    }

private:
    const std::optional<std::map<std::string, RubricText>>& preloaded_;
    std::mutex mutex_;
    std::map<std::string, std::shared_future<RubricOutcome>> entries_;
};

} // namespace

RunSummary run_batch(const Dataset& dataset, const RunPlan& plan, RunStore& store,
                     const BackendSet& backends, const PromptRenderer& renderer,
                     const RunOptions& options) {
    validate_plan(plan);
    for (const ModelSpec& model : plan.models) {
        backends.for_model(model.name);   // fail before starting the pool
    }

    // Canonical cell order: model, then method, then answers grouped by
    // question in dataset order. Finalization follows this order exactly.
    std::vector<Cell> cells;
    for (const ModelSpec& model : plan.models) {
        for (Method method : plan.methods) {
            const bool judge_cell = method == Method::JudgeLM;
            if (judge_cell != (model.role == ModelRole::JudgeLM)) {
                continue;
            }
            for (const QuestionItem& question : dataset.questions()) {
                for (const StudentAnswer* answer : dataset.answers_for_question(question.question_id)) {
                    Cell cell;
                    cell.model = &model;
                    cell.method = method;
                    cell.question = &question;
                    cell.answer = answer;
                    EvaluationRecord probe;
                    probe.question_id = question.question_id;
                    probe.student_id = answer->student_id;
                    probe.method = method;
                    probe.model_name = model.name;
                    cell.skip = store.finalized(probe.cell_key());
                    cells.push_back(cell);
                }
            }
        }
    }

    RunSummary summary;
    summary.total_cells = cells.size();

    std::vector<CellResult> slots(cells.size());
    std::mutex slot_mutex;
    std::condition_variable slot_cv;
    std::atomic<std::size_t> next_cell{0};
    std::atomic<bool> abort{false};
    std::atomic<int> active_workers{0};
    RubricCache rubric_cache(options.rubrics);

    auto make_context = [&](const ModelSpec& model) {
        EvalContext ctx;
        ctx.renderer = &renderer;
        ctx.client = &backends.for_model(model.name);
        ctx.params = model.params;
        ctx.budget = model.budget;
        ctx.retry_limit = plan.retry_limit;
        return ctx;
    };

    auto evaluate_cell = [&](const Cell& cell) -> EvaluationRecord {
        const EvalContext ctx = make_context(*cell.model);
        switch (cell.method) {
            case Method::JudgeLM:
                return evaluate_judgelm(*cell.question, *cell.answer, ctx);
            case Method::ReferenceAided:
            case Method::NoReference:
                return evaluate_scored(cell.method, *cell.question, *cell.answer, fixed_rubric(),
                                       ctx);
            case Method::Additive:
                return evaluate_additive(*cell.question, *cell.answer, ctx);
            case Method::Adaptive: {
                RubricOutcome outcome = rubric_cache.resolve(*cell.model, *cell.question, ctx);
                if (!outcome.rubric) {
                    EvaluationRecord record =
                        base_record(*cell.question, *cell.answer, Method::Adaptive, ctx.params);
                    record.transcript_refs = outcome.transcript_refs;
                    return parse_failed_record(
                        std::move(record),
                        outcome.failure.value_or(ParseFailure{
                            ParseStage::BadField, "criteria generation failed", ""}));
                }
                EvaluationRecord record =
                    evaluate_adaptive(*cell.question, *cell.answer, *outcome.rubric, ctx);
                record.transcript_refs.insert(record.transcript_refs.begin(),
                                              outcome.transcript_refs.begin(),
                                              outcome.transcript_refs.end());
                return record;
            }
        }
        throw std::logic_error("unreachable method");
    };

    auto worker = [&] {
        active_workers.fetch_add(1);
        while (!abort.load()) {
            const std::size_t index = next_cell.fetch_add(1);
            if (index >= cells.size()) {
                break;
            }
            CellResult result;
            if (cells[index].skip) {
                result.done = true;
            } else {
                try {
                    result.record = evaluate_cell(cells[index]);
                    result.done = true;
                } catch (...) {
                    result.error = std::current_exception();
                    result.done = true;
                    abort.store(true);
                }
            }
            {
                std::lock_guard<std::mutex> lock(slot_mutex);
                slots[index] = std::move(result);
            }
            slot_cv.notify_all();
        }
        if (active_workers.fetch_sub(1) == 1) {
            slot_cv.notify_all();
        }
    };

    const int worker_count =
        std::max(1, std::min<int>(plan.concurrency_limit, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int i = 0; i < worker_count; ++i) {
        pool.emplace_back(worker);
    }

    // Commit strictly in canonical order so the store file is identical at
    // any concurrency level. A cell that failed (or was abandoned after an
    // abort) stops the commit; everything before it is durable for resume.
    std::exception_ptr failure;
    {
        std::unique_lock<std::mutex> lock(slot_mutex);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            slot_cv.wait(lock, [&] {
                return slots[i].done || (abort.load() && active_workers.load() == 0);
            });
            if (!slots[i].done) {
                break;   // abandoned after an abort upstream
            }
            if (slots[i].error) {
                failure = slots[i].error;
                break;
            }
            if (!slots[i].record) {
                ++summary.skipped;
                continue;
            }
            const EvaluationRecord& record = *slots[i].record;
            lock.unlock();
            store.append(record);
            lock.lock();
            switch (record.status) {
                case RecordStatus::Ok: ++summary.ok; break;
                case RecordStatus::Overflow: ++summary.overflow; break;
                case RecordStatus::ParseFailed: ++summary.parse_failed; break;
            }
            if (options.progress) {
                options.progress(summary);
            }
        }
    }

    abort.store(true);
    for (std::thread& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return summary;
}

} // namespace tipgrade
