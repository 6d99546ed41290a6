#include "sqakit/mockmodels.hpp"

#include <cctype>
#include <regex>

#include <nlohmann/json.hpp>

#include "sqakit/io.hpp"

namespace sqakit::mockmodels {

using nlohmann::json;

namespace {

std::string joined_text(const prompting::PromptBundle& bundle) {
    std::string text;
    for (const prompting::Message& m : bundle.messages) {
        if (!text.empty()) text += '\n';
        text += m.text;
    }
    return text;
}

std::string last_assistant_text(const prompting::PromptBundle& bundle) {
    for (auto it = bundle.messages.rbegin(); it != bundle.messages.rend(); ++it) {
        if (it->role == prompting::Role::Assistant) return it->text;
    }
    return {};
}

/// Pulls the other model's answer out of a validation prompt using the
/// template's framing markers.
std::optional<std::string> embedded_other_answer(const prompting::PromptBundle& bundle) {
    if (bundle.messages.empty()) return std::nullopt;
    const std::string& text = bundle.messages.back().text;
    const std::string prefix = prompting::kValidationAnswerPrefix;
    const std::string suffix = prompting::kValidationAnswerSuffix;
    const std::size_t start = text.find(prefix);
    if (start == std::string::npos) return std::nullopt;
    const std::size_t answer_begin = start + prefix.size();
    const std::size_t end = text.rfind(suffix);
    if (end == std::string::npos || end < answer_begin) return std::nullopt;
    return text.substr(answer_begin, end - answer_begin);
}

std::string substitute_captures(const std::string& text, const std::smatch& match) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '$' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            const std::size_t group = static_cast<std::size_t>(text[i + 1] - '0');
            if (group < match.size()) {
                out += match[group].str();
                ++i;
                continue;
            }
        }
        out += text[i];
    }
    return out;
}

} // namespace

MockScript MockScript::from_json(const std::string& content) {
    json j;
    try {
        j = json::parse(content);
    } catch (const json::exception& e) {
        throw std::runtime_error("unparseable mock script: " + std::string(e.what()));
    }
    MockScript script;
    if (!j.contains("default") || !j["default"].is_string()) {
        throw std::runtime_error("mock script needs a string 'default' response");
    }
    script.default_response = j["default"].get<std::string>();
    for (const json& rj : j.value("rules", json::array())) {
        MockRule rule;
        const json& match = rj.value("match", json::object());
        if (match.contains("template_id")) rule.template_id = match["template_id"].get<std::string>();
        if (match.contains("contains")) rule.contains = match["contains"].get<std::string>();
        if (match.contains("regex")) rule.regex = match["regex"].get<std::string>();
        const json& respond = rj.at("respond");
        const std::string kind = respond.value("kind", "text");
        if (kind == "text") {
            rule.kind = MockRule::RespondKind::Text;
            rule.text = respond.at("text").get<std::string>();
        } else if (kind == "echo_assistant") {
            rule.kind = MockRule::RespondKind::EchoAssistant;
        } else if (kind == "echo_other_answer") {
            rule.kind = MockRule::RespondKind::EchoOtherAnswer;
        } else {
            throw std::runtime_error("unknown mock respond kind: " + kind);
        }
        script.rules.push_back(std::move(rule));
    }
    return script;
}

MockScript MockScript::from_file(const std::filesystem::path& path) {
    return from_json(io::read_file(path));
}

std::string render_response(const prompting::PromptBundle& bundle, const MockScript& script) {
    const std::string text = joined_text(bundle);
    for (const MockRule& rule : script.rules) {
        if (rule.template_id && *rule.template_id != bundle.template_id) continue;
        if (rule.contains && text.find(*rule.contains) == std::string::npos) continue;
        std::smatch match;
        if (rule.regex) {
            const std::regex re(*rule.regex);
            if (!std::regex_search(text, match, re)) continue;
        }
        switch (rule.kind) {
            case MockRule::RespondKind::Text:
                return rule.regex ? substitute_captures(rule.text, match) : rule.text;
            case MockRule::RespondKind::EchoAssistant:
                return last_assistant_text(bundle);
            case MockRule::RespondKind::EchoOtherAnswer: {
                const auto other = embedded_other_answer(bundle);
                if (other) return *other;
                break; // not a validation bundle; fall through to later rules
            }
        }
    }
    return script.default_response;
}

gateway::RawResponse mock_complete(const prompting::PromptBundle& bundle, const MockScript& script,
                                   const std::string& model_id) {
    gateway::RawResponse r;
    r.model_id = model_id;
    r.request_fingerprint =
        gateway::request_fingerprint(model_id, bundle, bundle.params);
    r.text = render_response(bundle, script);
    r.latency_ms = 0;
    r.fetched_at = "1970-01-01T00:00:00Z";
    r.origin = gateway::Origin::Live;
    return r;
}

} // namespace sqakit::mockmodels
