#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tipgrade {

/// Sampling configuration sent with every request.
struct SamplingParams {
    std::string model_name;
    double temperature = 0.2;
    int max_completion_tokens = 1024;
};

enum class Role { System, User, Assistant };

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    SamplingParams params;
};

enum class FinishReason { Stop, Length, Other };

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct Completion {
    std::string content;
    FinishReason finish_reason = FinishReason::Stop;
    std::string finish_detail;        // original reason string when Other
    std::optional<TokenUsage> usage;
};

/// Stable key of a request: depends only on message roles, texts, order,
/// and sampling params. See kDigestAlgorithm for the scheme.
std::string request_digest(const ChatRequest& request);

/// One recorded exchange.
struct Transcript {
    std::string digest;
    ChatRequest request;
    Completion completion;
    std::string timestamp;   // ISO-8601 UTC, informational only
};

/// Something that can answer chat requests: a live endpoint, a replay
/// store, or a recording wrapper around a live endpoint.
class ClientBackend {
public:
    virtual ~ClientBackend() = default;
    virtual Completion complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;                                // total tries incl. the first
    std::chrono::milliseconds initial_delay{250};        // doubles per retry
    std::chrono::milliseconds max_total_delay{10'000};   // ceiling across all backoffs
};

struct HttpClientConfig {
    std::string base_url;            // scheme://host[:port]
    std::string api_key;             // sent as Bearer token when non-empty
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
};

/// Live chat-completions client. Retries transient transport failures
/// (connection errors, 408/429/5xx) with exponential backoff; surfaces the
/// response payload on other non-success statuses.
class HttpBackend : public ClientBackend {
public:
    explicit HttpBackend(HttpClientConfig config);
    Completion complete(const ChatRequest& request) override;

    /// Wire-level observability for tests and run logs.
    std::size_t requests_sent() const noexcept;
    std::size_t retries_performed() const noexcept;

private:
    HttpClientConfig config_;
    std::atomic<std::size_t> requests_sent_{0};
    std::atomic<std::size_t> retries_{0};
};

/// Append-only log of transcripts, one JSON record per line under a header
/// naming the digest algorithm. Reads are lock-free after open; appends are
/// serialized.
class TranscriptStore {
public:
    /// Opens an existing store or creates an empty one (header written on
    /// first append).
    static TranscriptStore open(const std::filesystem::path& path);

    void append(const Transcript& transcript);
    std::optional<Completion> find(const std::string& digest) const;
    std::size_t size() const;
    const std::filesystem::path& path() const noexcept { return path_; }

    /// sha256 of the store file bytes; empty string for a store with no file
    /// yet. Used in run manifests.
    std::string file_digest() const;

private:
    std::filesystem::path path_;
    std::unordered_map<std::string, Completion> entries_;
    std::vector<std::string> order_;   // digests in append order
    std::unique_ptr<std::mutex> write_mutex_ = std::make_unique<std::mutex>();
    bool header_written_ = false;
};

/// Deterministic backend resolving requests from a transcript store.
/// Performs no network activity; a missing digest raises ReplayMissError.
class ReplayBackend : public ClientBackend {
public:
    explicit ReplayBackend(std::shared_ptr<const TranscriptStore> store);
    Completion complete(const ChatRequest& request) override;

    /// How many lookups were served for one digest / in total.
    std::size_t lookups(const std::string& digest) const;
    std::size_t total_lookups() const;

private:
    std::shared_ptr<const TranscriptStore> store_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::size_t> hit_counts_;
    std::size_t total_ = 0;
};

/// Live backend that appends every exchange to a transcript store.
class RecordingBackend : public ClientBackend {
public:
    RecordingBackend(ClientBackend& live, TranscriptStore& store);
    Completion complete(const ChatRequest& request) override;

private:
    ClientBackend* live_;
    TranscriptStore* store_;
};

} // namespace tipgrade
