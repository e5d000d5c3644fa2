#include "tipgrade/config.hpp"
#include "tipgrade/dataset.hpp"
#include "tipgrade/errors.hpp"
#include "tipgrade/pipelines.hpp"
#include "tipgrade/report.hpp"
#include "tipgrade/run_store.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace tipgrade;

constexpr int kExitOk = 0;
constexpr int kExitMethodFailures = 1;
constexpr int kExitInputError = 2;
constexpr int kExitTransport = 3;

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value != nullptr ? std::string(value) : fallback;
}

struct RunFlags {
    std::string config_path;
    std::string mode_id = "replay";
    std::string dataset_override;
    std::string methods_override;   // comma-separated ids
    std::string out_override;
    int concurrency_override = 0;
    bool force = false;
};

RunConfig load_effective_config(const RunFlags& flags) {
    RunConfig config = load_config(flags.config_path);
    if (!flags.dataset_override.empty()) {
        config.dataset_path = flags.dataset_override;
    }
    if (!flags.out_override.empty()) {
        config.output_dir = flags.out_override;
    }
    if (flags.concurrency_override > 0) {
        config.concurrency = flags.concurrency_override;
    }
    if (!flags.methods_override.empty()) {
        config.methods.clear();
        std::istringstream stream(flags.methods_override);
        std::string id;
        while (std::getline(stream, id, ',')) {
            const auto method = method_from_id(id);
            if (!method) {
                throw ConfigError("unknown method \"" + id + "\" in --methods");
            }
            config.methods.push_back(*method);
        }
    }
    return config;
}

struct BackendBundle {
    BackendSet set;
    std::shared_ptr<TranscriptStore> transcript_store;
    std::shared_ptr<ReplayBackend> replay;
    std::vector<std::shared_ptr<ClientBackend>> keep_alive;
    std::string transcript_digest;
};

BackendBundle build_backends(const RunPlan& plan, RunMode mode, const RunConfig& config) {
    BackendBundle bundle;
    const std::string env_base = env_or("TIPGRADE_BASE_URL", "");
    const std::string api_key = env_or("TIPGRADE_API_KEY", "");

    if (mode == RunMode::Replay) {
        if (config.transcript_store_path.empty() ||
            !std::filesystem::exists(config.transcript_store_path)) {
            throw ConfigError("replay mode requires an existing transcript store (transcript_store)");
        }
        bundle.transcript_store = std::make_shared<TranscriptStore>(
            TranscriptStore::open(config.transcript_store_path));
        bundle.transcript_digest = bundle.transcript_store->file_digest();
        bundle.replay = std::make_shared<ReplayBackend>(bundle.transcript_store);
        for (const ModelSpec& model : plan.models) {
            bundle.set.add(model.name, bundle.replay);
        }
        return bundle;
    }

    if (mode == RunMode::Record) {
        if (config.transcript_store_path.empty()) {
            throw ConfigError("record mode requires a transcript_store path");
        }
        bundle.transcript_store = std::make_shared<TranscriptStore>(
            TranscriptStore::open(config.transcript_store_path));
        bundle.transcript_digest = bundle.transcript_store->file_digest();
    }

    std::map<std::string, std::shared_ptr<ClientBackend>> by_url;
    for (const ModelSpec& model : plan.models) {
        const std::string base_url = env_base.empty() ? model.base_url : env_base;
        if (base_url.empty()) {
            throw ConfigError("model " + model.name +
                              " has no base_url (set it in the config or TIPGRADE_BASE_URL)");
        }
        auto it = by_url.find(base_url);
        if (it == by_url.end()) {
            HttpClientConfig http;
            http.base_url = base_url;
            http.api_key = api_key;
            auto live = std::make_shared<HttpBackend>(http);
            bundle.keep_alive.push_back(live);
            if (mode == RunMode::Record) {
                auto recording =
                    std::make_shared<RecordingBackend>(*live, *bundle.transcript_store);
                bundle.keep_alive.push_back(recording);
                it = by_url.emplace(base_url, recording).first;
            } else {
                it = by_url.emplace(base_url, live).first;
            }
        }
        bundle.set.add(model.name, it->second);
    }
    return bundle;
}

int cmd_validate(const std::string& dataset_path) {
    if (!std::filesystem::exists(dataset_path)) {
        std::cerr << "tipgrade: cannot read " << dataset_path << "\n";
        return kExitInputError;
    }
    LenientLoadResult result = load_dataset_lenient(dataset_path);
    for (const Violation& v : result.report) {
        std::cout << v.rule << " " << v.key << ": " << v.message << "\n";
    }
    return result.report.empty() ? kExitOk : kExitMethodFailures;
}

int cmd_run(const RunFlags& flags) {
    const RunConfig config = load_effective_config(flags);
    const auto mode = run_mode_from_id(flags.mode_id);
    if (!mode) {
        throw ConfigError("unknown mode \"" + flags.mode_id + "\" (live|record|replay)");
    }
    if (config.dataset_path.empty() || config.run_store_path.empty()) {
        throw ConfigError("config must provide dataset and run_store paths");
    }

    const Dataset dataset = load_dataset(config.dataset_path);
    RunPlan plan = make_plan(config);
    validate_plan(plan);

    BackendBundle backends = build_backends(plan, *mode, config);
    PromptRenderer renderer;

    RunManifest manifest;
    manifest.plan = plan;
    manifest.counter_id = config.counter_id;
    manifest.template_digests = renderer.templates().digests();
    manifest.transcript_store_digest = backends.transcript_digest;

    RunStore store = RunStore::create_or_resume(config.run_store_path, manifest);

    RunOptions options;
    if (!config.rubric_path.empty() && std::filesystem::exists(config.rubric_path)) {
        options.rubrics = load_rubrics(config.rubric_path);
    }
    const std::size_t total = dataset.answers().size();   // reported per method x model by progress
    (void)total;
    options.progress = [](const RunSummary& s) {
        std::cerr << "cells " << (s.skipped + s.ok + s.overflow + s.parse_failed) << "/"
                  << s.total_cells << " ok=" << s.ok << " overflow=" << s.overflow
                  << " parse_failed=" << s.parse_failed << "\n";
    };

    const RunSummary summary = run_batch(dataset, plan, store, backends.set, renderer, options);
    std::cerr << "done: " << summary.total_cells << " cells (" << summary.skipped
              << " already finalized)\n";
    std::cerr << "ok: " << summary.ok << "\n";
    std::cerr << "overflow: " << summary.overflow << "\n";
    std::cerr << "parse_failed: " << summary.parse_failed << "\n";

    std::size_t failed_cells = 0;
    for (const EvaluationRecord& r : store.records()) {
        if (r.status == RecordStatus::ParseFailed) {
            ++failed_cells;
        }
    }
    return failed_cells == 0 ? kExitOk : kExitMethodFailures;
}

int cmd_report(const std::string& run_store_path, const std::string& dataset_path,
               const std::string& out_dir) {
    if (!std::filesystem::exists(run_store_path) || !std::filesystem::exists(dataset_path)) {
        std::cerr << "tipgrade: run store or dataset not readable\n";
        return kExitInputError;
    }
    const RunStore store = RunStore::load(run_store_path);
    const Dataset dataset = load_dataset(dataset_path);
    emit_report(store.records(), dataset, out_dir);

    for (const MethodModelGroup& group : group_records(store.records())) {
        const AgreementStats a = agreement(group.records, dataset);
        std::cout << method_display_name(group.method) << " / " << group.model_name << ": n="
                  << group.records.size();
        if (a.mad) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), " MAD=%.3f RMSE=%.3f", *a.mad, *a.rmse);
            std::cout << buf;
        }
        std::cout << "\n";
    }
    std::cout << "report written to " << out_dir << "\n";
    return kExitOk;
}

int cmd_criteria(const RunFlags& flags, const std::string& out_path) {
    const RunConfig config = load_effective_config(flags);
    const auto mode = run_mode_from_id(flags.mode_id);
    if (!mode) {
        throw ConfigError("unknown mode \"" + flags.mode_id + "\" (live|record|replay)");
    }
    if (config.dataset_path.empty()) {
        throw ConfigError("config must provide a dataset path");
    }
    if (std::filesystem::exists(out_path) && !flags.force) {
        std::cout << out_path << " already exists; pass --force to regenerate\n";
        return kExitOk;
    }

    const Dataset dataset = load_dataset(config.dataset_path);
    RunPlan plan = make_plan(config);
    const ModelSpec* generator = nullptr;
    for (const ModelSpec& model : plan.models) {
        if (model.role == ModelRole::General) {
            generator = &model;
            break;
        }
    }
    if (generator == nullptr) {
        throw ConfigError("criteria generation needs a general-role model in the config");
    }

    BackendBundle backends = build_backends(plan, *mode, config);
    PromptRenderer renderer;
    EvalContext ctx;
    ctx.renderer = &renderer;
    ctx.client = &backends.set.for_model(generator->name);
    ctx.params = generator->params;
    ctx.budget = generator->budget;
    ctx.retry_limit = config.retry_limit;

    std::map<std::string, RubricText> rubrics;
    std::vector<std::string> failures;
    for (const QuestionItem& question : dataset.questions()) {
        const RubricOutcome outcome = generate_rubric(question, ctx);
        if (outcome.rubric) {
            rubrics.emplace(question.question_id, *outcome.rubric);
        } else {
            std::string reason = outcome.failure ? outcome.failure->detail : "generation failed";
            failures.push_back(question.question_id + ": " + reason);
        }
    }
    save_rubrics(rubrics, out_path);
    std::cout << rubrics.size() << " rubrics written to " << out_path << "\n";
    if (!failures.empty()) {
        std::cout << "failed questions:\n";
        for (const std::string& f : failures) {
            std::cout << "  " << f << "\n";
        }
        return kExitMethodFailures;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tipgrade: batch grading of text-input problems with LLM pipelines"};
    app.require_subcommand(1);

    std::string dataset_path;
    auto* validate = app.add_subcommand("validate", "check a dataset file against the record rules");
    validate->add_option("--dataset", dataset_path, "dataset file")->required();

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "execute the evaluation plan from a config file");
    run->add_option("--config", run_flags.config_path, "JSON run configuration")->required();
    run->add_option("--mode", run_flags.mode_id, "live | record | replay (default replay)");
    run->add_option("--dataset", run_flags.dataset_override, "override dataset path");
    run->add_option("--methods", run_flags.methods_override, "comma-separated method ids");
    run->add_option("--out", run_flags.out_override, "override output directory");
    run->add_option("--concurrency", run_flags.concurrency_override, "worker pool size");

    std::string report_store, report_dataset, report_out;
    auto* report = app.add_subcommand("report", "compute statistics and agreement tables");
    report->add_option("--run-store", report_store, "run store file")->required();
    report->add_option("--dataset", report_dataset, "dataset file")->required();
    report->add_option("--out", report_out, "output directory")->required();

    RunFlags criteria_flags;
    std::string criteria_out;
    auto* criteria = app.add_subcommand("criteria", "pre-generate adaptive rubrics per question");
    criteria->add_option("--config", criteria_flags.config_path, "JSON run configuration")->required();
    criteria->add_option("--mode", criteria_flags.mode_id, "live | record | replay (default replay)");
    criteria->add_option("--dataset", criteria_flags.dataset_override, "override dataset path");
    criteria->add_option("--out", criteria_out, "rubric output file")->required();
    criteria->add_flag("--force", criteria_flags.force, "regenerate even if the output exists");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (validate->parsed()) {
            return cmd_validate(dataset_path);
        }
        if (run->parsed()) {
            return cmd_run(run_flags);
        }
        if (report->parsed()) {
            return cmd_report(report_store, report_dataset, report_out);
        }
        if (criteria->parsed()) {
            return cmd_criteria(criteria_flags, criteria_out);
        }
    } catch (const TransportError& e) {
        std::cerr << "tipgrade: transport failure: " << e.what() << "\n";
        return kExitTransport;
    } catch (const Error& e) {
        std::cerr << "tipgrade: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "tipgrade: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
