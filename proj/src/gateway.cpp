#include "sqakit/gateway.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "sqakit/io.hpp"
#include "sqakit/mockmodels.hpp"

namespace sqakit::gateway {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(GatewayError::Kind kind) {
    switch (kind) {
        case GatewayError::Kind::CacheMiss: return "cache_miss";
        case GatewayError::Kind::Transport: return "transport";
        case GatewayError::Kind::Auth: return "auth";
        case GatewayError::Kind::ContextLengthExceeded: return "context_length_exceeded";
        case GatewayError::Kind::Provider: return "provider";
    }
    return "unknown";
}

CacheMode cache_mode_from_string(std::string_view s) {
    if (s == "record") return CacheMode::LiveRecord;
    if (s == "replay") return CacheMode::ReplayOnly;
    if (s == "bypass") return CacheMode::LiveBypass;
    throw std::invalid_argument("unknown cache mode: " + std::string(s));
}

std::string_view to_string(CacheMode mode) {
    switch (mode) {
        case CacheMode::LiveRecord: return "record";
        case CacheMode::ReplayOnly: return "replay";
        case CacheMode::LiveBypass: return "bypass";
    }
    return "unknown";
}

prompting::GenerationParams effective_params(const prompting::PromptBundle& bundle,
                                             const ModelConfig& cfg) {
    return cfg.params_override.value_or(bundle.params);
}

std::string request_fingerprint(const std::string& model_id, const prompting::PromptBundle& bundle,
                                const prompting::GenerationParams& params) {
    ordered_json j;
    j["model_id"] = model_id;
    ordered_json messages = ordered_json::array();
    for (const prompting::Message& m : bundle.messages) {
        messages.push_back({{"role", std::string(prompting::to_string(m.role))}, {"text", m.text}});
    }
    j["messages"] = std::move(messages);
    j["params"] = {{"temperature", params.temperature}, {"max_tokens", params.max_tokens}};
    return io::sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const fs::path& p = entry.path();
        if (p.extension() != ".json" || p.filename() == "index.json") continue;
        const json j = json::parse(io::read_file(p), nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded()) continue;
        index_[p.stem().string()] =
            IndexEntry{j.value("model_id", ""), j.value("fetched_at", "")};
    }
}

fs::path ResponseCache::entry_path(const std::string& fingerprint) const {
    return dir_ / (fingerprint + ".json");
}

std::optional<RawResponse> ResponseCache::lookup(const std::string& fingerprint) {
    const fs::path path = entry_path(fingerprint);
    std::string content;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!fs::exists(path)) return std::nullopt;
        content = io::read_file(path);
    }
    const json j = json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() ||
        j.value("request_fingerprint", "") != fingerprint) {
        return std::nullopt; // treat a corrupt or mismatched entry as a miss
    }
    RawResponse r;
    r.model_id = j.at("model_id").get<std::string>();
    r.request_fingerprint = fingerprint;
    r.text = j.at("text").get<std::string>();
    r.latency_ms = j.at("latency_ms").get<long>();
    r.fetched_at = j.at("fetched_at").get<std::string>();
    r.origin = Origin::Replay;
    return r;
}

void ResponseCache::store(const RawResponse& response) {
    ordered_json j;
    j["model_id"] = response.model_id;
    j["request_fingerprint"] = response.request_fingerprint;
    j["text"] = response.text;
    j["latency_ms"] = response.latency_ms;
    j["fetched_at"] = response.fetched_at;

    std::lock_guard<std::mutex> lock(mutex_);
    io::write_file_atomic(entry_path(response.request_fingerprint), j.dump(2) + "\n");
    index_[response.request_fingerprint] = IndexEntry{response.model_id, response.fetched_at};
    write_index_locked();
}

void ResponseCache::write_index_locked() {
    ordered_json entries = ordered_json::object();
    for (const auto& [fingerprint, entry] : index_) {
        entries[fingerprint] = {{"model_id", entry.model_id}, {"fetched_at", entry.fetched_at}};
    }
    ordered_json index;
    index["entry_count"] = index_.size();
    index["entries"] = std::move(entries);
    io::write_file_atomic(dir_ / "index.json", index.dump(2) + "\n");
}

long ResponseCache::entry_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<long>(index_.size());
}

std::map<std::string, long> ResponseCache::entries_per_model() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::map<std::string, long> counts;
    for (const auto& [_, entry] : index_) ++counts[entry.model_id];
    return counts;
}

// ---------------------------------------------------------------------------
// BackendRegistry

void BackendRegistry::register_provider(const std::string& name, BackendFactory factory) {
    factories_[name] = std::move(factory);
}

std::unique_ptr<Backend> BackendRegistry::make(const ModelConfig& cfg) const {
    const auto it = factories_.find(cfg.provider);
    if (it == factories_.end()) {
        throw GatewayError(GatewayError::Kind::Provider, "unknown provider: " + cfg.provider);
    }
    return it->second(cfg);
}

BackendRegistry BackendRegistry::with_defaults() {
    BackendRegistry registry;
    registry.register_provider("openai-chat",
                               [](const ModelConfig&) { return std::make_unique<HttpChatBackend>(); });
    registry.register_provider("mock", [](const ModelConfig& cfg) -> std::unique_ptr<Backend> {
        return std::make_unique<mockmodels::MockBackend>(mockmodels::MockScript::from_file(cfg.script));
    });
    return registry;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(fs::path cache_dir, BackendRegistry registry)
    : cache_(std::move(cache_dir)), registry_(std::move(registry)) {}

Backend& Gateway::backend_for(const ModelConfig& cfg) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = backends_.find(cfg.model_id);
    if (it == backends_.end()) {
        it = backends_.emplace(cfg.model_id, registry_.make(cfg)).first;
    }
    return *it->second;
}

RawResponse Gateway::complete(const prompting::PromptBundle& bundle, const ModelConfig& cfg,
                              CacheMode mode) {
    const prompting::GenerationParams params = effective_params(bundle, cfg);
    const std::string fingerprint = request_fingerprint(cfg.model_id, bundle, params);

    if (mode == CacheMode::ReplayOnly) {
        std::optional<RawResponse> cached = cache_.lookup(fingerprint);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            cached ? ++stats_.hits : ++stats_.misses;
        }
        if (!cached) {
            throw GatewayError(GatewayError::Kind::CacheMiss,
                               "no cached response for fingerprint " + fingerprint);
        }
        return *cached;
    }

    Backend& backend = backend_for(cfg);
    const auto started = std::chrono::steady_clock::now();
    RawResponse response;
    response.model_id = cfg.model_id;
    response.request_fingerprint = fingerprint;
    response.fetched_at = io::iso8601_utc_now();
    response.text = backend.complete(bundle, cfg, params);
    response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    response.origin = Origin::Live;

    if (mode == CacheMode::LiveRecord) {
        cache_.store(response);
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.writes;
    }
    return response;
}

std::vector<BatchEntry> Gateway::complete_batch(std::span<const BatchRequest> requests,
                                                int parallelism, CacheMode mode) {
    std::vector<BatchEntry> results(requests.size());
    if (requests.empty()) return results;
    parallelism = std::max(1, parallelism);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                results[i].response = complete(requests[i].bundle, requests[i].config, mode);
            } catch (const GatewayError& e) {
                results[i].error = e.what();
                results[i].error_kind = e.kind();
            } catch (const std::exception& e) {
                results[i].error = e.what();
                results[i].error_kind = GatewayError::Kind::Provider;
            }
        }
    };

    const std::size_t thread_count =
        std::min<std::size_t>(static_cast<std::size_t>(parallelism), requests.size());
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(thread_count);
        for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    return results;
}

CacheStats Gateway::session_stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

} // namespace sqakit::gateway
