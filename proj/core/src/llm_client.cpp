#include "tipgrade/llm_client.hpp"

#include "tipgrade/digest.hpp"
#include "tipgrade/errors.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

namespace tipgrade {
namespace {

using nlohmann::json;

const char* role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

json request_to_json(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    return json{{"messages", std::move(messages)},
                {"params",
                 {{"model", request.params.model_name},
                  {"temperature", request.params.temperature},
                  {"max_tokens", request.params.max_completion_tokens}}}};
}

json completion_to_json(const Completion& completion) {
    json j{{"content", completion.content}};
    switch (completion.finish_reason) {
        case FinishReason::Stop: j["finish_reason"] = "stop"; break;
        case FinishReason::Length: j["finish_reason"] = "length"; break;
        case FinishReason::Other:
            j["finish_reason"] = "other";
            j["finish_detail"] = completion.finish_detail;
            break;
    }
    if (completion.usage) {
        j["usage"] = {{"prompt_tokens", completion.usage->prompt_tokens},
                      {"completion_tokens", completion.usage->completion_tokens}};
    }
    return j;
}

Completion completion_from_json(const json& j) {
    Completion completion;
    completion.content = j.at("content").get<std::string>();
    const std::string reason = j.value("finish_reason", "stop");
    if (reason == "stop") {
        completion.finish_reason = FinishReason::Stop;
    } else if (reason == "length") {
        completion.finish_reason = FinishReason::Length;
    } else {
        completion.finish_reason = FinishReason::Other;
        completion.finish_detail = j.value("finish_detail", reason);
    }
    if (j.contains("usage")) {
        TokenUsage usage;
        usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
        usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
        completion.usage = usage;
    }
    return completion;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool transient_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status < 600);
}

bool mentions_context_overflow(const std::string& body) {
    std::string lowered(body);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lowered.find("context length") != std::string::npos ||
           lowered.find("context window") != std::string::npos ||
           lowered.find("maximum context") != std::string::npos;
}

} // namespace

std::string request_digest(const ChatRequest& request) {
    // nlohmann sorts object keys, so dump() is canonical for this shape.
    return sha256_hex(request_to_json(request).dump());
}

HttpBackend::HttpBackend(HttpClientConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw ConfigError("live backend requires a base_url");
    }
}

Completion HttpBackend::complete(const ChatRequest& request) {
    json body{{"model", request.params.model_name},
              {"temperature", request.params.temperature},
              {"max_tokens", request.params.max_completion_tokens}};
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    body["messages"] = std::move(messages);
    const std::string payload = body.dump();

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout.count(), 0);
    client.set_read_timeout(config_.timeout.count(), 0);
    client.set_write_timeout(config_.timeout.count(), 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    std::string last_error;
    std::chrono::milliseconds delay = config_.retry.initial_delay;
    std::chrono::milliseconds slept{0};
    for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
        if (attempt > 0) {
            if (slept + delay > config_.retry.max_total_delay) {
                break;
            }
            std::this_thread::sleep_for(delay);
            slept += delay;
            delay *= 2;
            retries_.fetch_add(1, std::memory_order_relaxed);
        }
        requests_sent_.fetch_add(1, std::memory_order_relaxed);
        httplib::Result res = client.Post("/v1/chat/completions", headers, payload,
                                          "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            json reply = json::parse(res->body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
                throw TransportError("malformed completion response: " + res->body.substr(0, 500));
            }
            const json& choice = reply["choices"][0];
            Completion completion;
            completion.content = choice.at("message").value("content", "");
            const std::string reason = choice.value("finish_reason", "stop");
            if (reason == "stop") {
                completion.finish_reason = FinishReason::Stop;
            } else if (reason == "length") {
                completion.finish_reason = FinishReason::Length;
            } else {
                completion.finish_reason = FinishReason::Other;
                completion.finish_detail = reason;
            }
            if (reply.contains("usage") && reply["usage"].is_object()) {
                TokenUsage usage;
                usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
                usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
                completion.usage = usage;
            }
            return completion;
        }
        if (transient_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status == 400 && mentions_context_overflow(res->body)) {
            throw ContextLengthError("endpoint rejected prompt as too long: " +
                                     res->body.substr(0, 500));
        }
        throw TransportError("HTTP " + std::to_string(res->status) + " from " +
                             config_.base_url + ": " + res->body.substr(0, 500));
    }
    throw TransportError("transport failure after retries against " + config_.base_url +
                         ": " + last_error);
}

std::size_t HttpBackend::requests_sent() const noexcept {
    return requests_sent_.load(std::memory_order_relaxed);
}

std::size_t HttpBackend::retries_performed() const noexcept {
    return retries_.load(std::memory_order_relaxed);
}

TranscriptStore TranscriptStore::open(const std::filesystem::path& path) {
    TranscriptStore store;
    store.path_ = path;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return store;   // new store; header goes out with the first append
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw StoreError(path.string() + ": malformed transcript line " +
                             std::to_string(line_no));
        }
        const std::string kind = j.value("kind", "");
        if (kind == "header") {
            const std::string algo = j.value("digest_algorithm", "");
            if (algo != kDigestAlgorithm) {
                throw StoreError(path.string() + ": digest algorithm mismatch: store has \"" +
                                 algo + "\", expected \"" + kDigestAlgorithm + "\"");
            }
            store.header_written_ = true;
        } else if (kind == "transcript") {
            const std::string digest = j.at("digest").get<std::string>();
            Completion completion = completion_from_json(j.at("completion"));
            if (store.entries_.emplace(digest, std::move(completion)).second) {
                store.order_.push_back(digest);
            }
        } else {
            throw StoreError(path.string() + ": unknown record kind \"" + kind + "\" at line " +
                             std::to_string(line_no));
        }
    }
    return store;
}

void TranscriptStore::append(const Transcript& transcript) {
    std::lock_guard<std::mutex> lock(*write_mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) {
        throw StoreError("cannot append to transcript store: " + path_.string());
    }
    if (!header_written_) {
        json header{{"kind", "header"},
                    {"format", "tipgrade-transcripts"},
                    {"version", 1},
                    {"digest_algorithm", kDigestAlgorithm}};
        out << header.dump() << '\n';
        header_written_ = true;
    }
    json j{{"kind", "transcript"},
           {"digest", transcript.digest},
           {"request", request_to_json(transcript.request)},
           {"completion", completion_to_json(transcript.completion)},
           {"timestamp", transcript.timestamp.empty() ? utc_timestamp() : transcript.timestamp}};
    out << j.dump() << '\n';
    if (!out) {
        throw StoreError("write failed: " + path_.string());
    }
    if (entries_.emplace(transcript.digest, transcript.completion).second) {
        order_.push_back(transcript.digest);
    }
}

std::optional<Completion> TranscriptStore::find(const std::string& digest) const {
    auto it = entries_.find(digest);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t TranscriptStore::size() const {
    return order_.size();
}

std::string TranscriptStore::file_digest() const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        return "";
    }
    std::ostringstream body;
    body << in.rdbuf();
    return sha256_hex(body.str());
}

ReplayBackend::ReplayBackend(std::shared_ptr<const TranscriptStore> store)
    : store_(std::move(store)) {
    if (!store_) {
        throw ConfigError("replay backend requires a transcript store");
    }
}

Completion ReplayBackend::complete(const ChatRequest& request) {
    const std::string digest = request_digest(request);
    auto completion = store_->find(digest);
    if (!completion) {
        throw ReplayMissError(digest);
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++hit_counts_[digest];
        ++total_;
    }
    return *completion;
}

std::size_t ReplayBackend::lookups(const std::string& digest) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = hit_counts_.find(digest);
    return it == hit_counts_.end() ? 0 : it->second;
}

std::size_t ReplayBackend::total_lookups() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return total_;
}

RecordingBackend::RecordingBackend(ClientBackend& live, TranscriptStore& store)
    : live_(&live), store_(&store) {}

Completion RecordingBackend::complete(const ChatRequest& request) {
    Completion completion = live_->complete(request);
    Transcript transcript;
    transcript.digest = request_digest(request);
    transcript.request = request;
    transcript.completion = completion;
    transcript.timestamp = utc_timestamp();
    store_->append(transcript);
    return completion;
}

} // namespace tipgrade
