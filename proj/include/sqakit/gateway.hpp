#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqakit/prompting.hpp"

namespace sqakit::gateway {

class GatewayError : public std::runtime_error {
public:
    enum class Kind { CacheMiss, Transport, Auth, ContextLengthExceeded, Provider };

    GatewayError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

std::string_view to_string(GatewayError::Kind kind);

enum class CacheMode { LiveRecord, ReplayOnly, LiveBypass };

CacheMode cache_mode_from_string(std::string_view s);
std::string_view to_string(CacheMode mode);

enum class Origin { Live, Replay };

struct ModelConfig {
    std::string model_id;              // unique within a run
    std::string provider = "openai-chat";
    std::string endpoint;              // chat-completion URL for HTTP providers
    std::string auth_env;              // env var NAME holding the key; never the key itself
    std::optional<prompting::GenerationParams> params_override;
    int priority_rank = 0;             // unique within a run; 1 = most preferred
    std::string script;                // mock provider: path to the script file
};

struct RawResponse {
    std::string model_id;
    std::string request_fingerprint;
    std::string text;
    long latency_ms = 0;
    std::string fetched_at; // ISO-8601 UTC, set at fetch time, replayed verbatim
    Origin origin = Origin::Live;
};

/// Content hash of model id + messages + effective generation params.
std::string request_fingerprint(const std::string& model_id,
                                const prompting::PromptBundle& bundle,
                                const prompting::GenerationParams& effective_params);

prompting::GenerationParams effective_params(const prompting::PromptBundle& bundle,
                                             const ModelConfig& cfg);

/// One chat-completion transport. Implementations throw GatewayError.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const prompting::PromptBundle& bundle, const ModelConfig& cfg,
                                 const prompting::GenerationParams& params) = 0;
};

using BackendFactory = std::function<std::unique_ptr<Backend>(const ModelConfig&)>;

class BackendRegistry {
public:
    void register_provider(const std::string& name, BackendFactory factory);
    std::unique_ptr<Backend> make(const ModelConfig& cfg) const;

    /// openai-chat plus the reserved "mock" provider.
    static BackendRegistry with_defaults();

private:
    std::map<std::string, BackendFactory> factories_;
};

struct CacheStats {
    long hits = 0;
    long misses = 0;
    long writes = 0;
};

/// Content-addressed response store: one JSON file per fingerprint plus an
/// index file. Entry writes are atomic (temp file + rename) and serialized.
/// The entry files are the source of truth; the index is derived metadata
/// and is rebuilt from the directory on open.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<RawResponse> lookup(const std::string& fingerprint);
    void store(const RawResponse& response);

    long entry_count() const;
    std::map<std::string, long> entries_per_model() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    struct IndexEntry {
        std::string model_id;
        std::string fetched_at;
    };

    std::filesystem::path entry_path(const std::string& fingerprint) const;
    void write_index_locked();

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::map<std::string, IndexEntry> index_;
};

struct BatchEntry {
    std::optional<RawResponse> response;
    std::optional<std::string> error;      // human-readable
    std::optional<GatewayError::Kind> error_kind;

    bool ok() const { return response.has_value(); }
};

struct BatchRequest {
    prompting::PromptBundle bundle;
    ModelConfig config;
};

class Gateway {
public:
    Gateway(std::filesystem::path cache_dir, BackendRegistry registry = BackendRegistry::with_defaults());

    RawResponse complete(const prompting::PromptBundle& bundle, const ModelConfig& cfg,
                         CacheMode mode);

    /// Responses in request order; at most `parallelism` requests in flight.
    /// Per-request failures are recorded, never aborting the batch.
    std::vector<BatchEntry> complete_batch(std::span<const BatchRequest> requests, int parallelism,
                                           CacheMode mode);

    CacheStats session_stats() const;
    ResponseCache& cache() { return cache_; }

private:
    Backend& backend_for(const ModelConfig& cfg);

    ResponseCache cache_;
    BackendRegistry registry_;
    std::map<std::string, std::unique_ptr<Backend>> backends_; // by model_id
    mutable std::mutex mutex_;
    CacheStats stats_;
};

/// HTTP adapter for OpenAI-style chat-completion endpoints. Retries
/// transport-level failures and 429/5xx with exponential backoff.
class HttpChatBackend : public Backend {
public:
    struct RetryPolicy {
        int max_attempts = 3;
        int backoff_base_ms = 250;
    };

    HttpChatBackend() = default;
    explicit HttpChatBackend(RetryPolicy retry) : retry_(retry) {}

    std::string complete(const prompting::PromptBundle& bundle, const ModelConfig& cfg,
                         const prompting::GenerationParams& params) override;

private:
    RetryPolicy retry_{};
};

} // namespace sqakit::gateway
