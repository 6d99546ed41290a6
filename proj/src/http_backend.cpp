#include <chrono>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sqakit/gateway.hpp"

namespace sqakit::gateway {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

struct ParsedUrl {
    std::string base; // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw GatewayError(GatewayError::Kind::Transport, "endpoint is not a URL: " + url);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool looks_like_context_overflow(const std::string& body) {
    return body.find("context_length") != std::string::npos ||
           body.find("context length") != std::string::npos ||
           body.find("maximum context") != std::string::npos;
}

ordered_json request_body(const prompting::PromptBundle& bundle, const ModelConfig& cfg,
                          const prompting::GenerationParams& params) {
    ordered_json body;
    body["model"] = cfg.model_id;
    ordered_json messages = ordered_json::array();
    for (const prompting::Message& m : bundle.messages) {
        messages.push_back(
            {{"role", std::string(prompting::to_string(m.role))}, {"content", m.text}});
    }
    body["messages"] = std::move(messages);
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    return body;
}

std::string extract_completion_text(const std::string& body) {
    const json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (!j.is_discarded()) {
        const auto choices = j.find("choices");
        if (choices != j.end() && choices->is_array() && !choices->empty()) {
            const json& first = (*choices)[0];
            if (first.contains("message") && first["message"].contains("content")) {
                return first["message"]["content"].get<std::string>();
            }
        }
    }
    throw GatewayError(GatewayError::Kind::Transport,
                       "response has no choices[0].message.content");
}

} // namespace

std::string HttpChatBackend::complete(const prompting::PromptBundle& bundle, const ModelConfig& cfg,
                                      const prompting::GenerationParams& params) {
    const ParsedUrl url = parse_url(cfg.endpoint);
    httplib::Client client(url.base);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);

    httplib::Headers headers;
    if (!cfg.auth_env.empty()) {
        const char* key = std::getenv(cfg.auth_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw GatewayError(GatewayError::Kind::Auth,
                               "environment variable " + cfg.auth_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const std::string body = request_body(bundle, cfg, params).dump();
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(retry_.backoff_base_ms << (attempt - 2)));
        }
        httplib::Result res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failure: " + httplib::to_string(res.error());
            continue;
        }
        const int status = res->status;
        if (status == 200) return extract_completion_text(res->body);
        if (status == 401 || status == 403) {
            throw GatewayError(GatewayError::Kind::Auth,
                               "authentication rejected (HTTP " + std::to_string(status) + ")");
        }
        if (status == 400 && looks_like_context_overflow(res->body)) {
            throw GatewayError(GatewayError::Kind::ContextLengthExceeded,
                               "request exceeds the model context window");
        }
        if (status == 429 || status >= 500) {
            last_error = "HTTP " + std::to_string(status);
            continue; // retryable
        }
        throw GatewayError(GatewayError::Kind::Transport,
                           "HTTP " + std::to_string(status) + ": " + res->body);
    }
    throw GatewayError(GatewayError::Kind::Transport,
                       "request failed after " + std::to_string(retry_.max_attempts) +
                           " attempts (" + last_error + ")");
}

} // namespace sqakit::gateway
