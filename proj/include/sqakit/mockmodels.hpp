#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sqakit/gateway.hpp"
#include "sqakit/prompting.hpp"

namespace sqakit::mockmodels {

/// Scriptable fake model backend. Scripts are data files so test scenarios
/// live beside the corpora they exercise. First matching rule wins; the
/// mandatory default response keeps matching total.
struct MockRule {
    enum class RespondKind { Text, EchoAssistant, EchoOtherAnswer };

    // All present conditions must hold for the rule to match.
    std::optional<std::string> template_id;
    std::optional<std::string> contains; // substring of the concatenated message text
    std::optional<std::string> regex;    // ECMAScript; capture groups usable as $1..$9

    RespondKind kind = RespondKind::Text;
    std::string text;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::string default_response;

    static MockScript from_json(const std::string& content);
    static MockScript from_file(const std::filesystem::path& path);
};

std::string render_response(const prompting::PromptBundle& bundle, const MockScript& script);

gateway::RawResponse mock_complete(const prompting::PromptBundle& bundle, const MockScript& script,
                                   const std::string& model_id);

class MockBackend : public gateway::Backend {
public:
    explicit MockBackend(MockScript script) : script_(std::move(script)) {}

    std::string complete(const prompting::PromptBundle& bundle, const gateway::ModelConfig&,
                         const prompting::GenerationParams&) override {
        return render_response(bundle, script_);
    }

private:
    MockScript script_;
};

} // namespace sqakit::mockmodels
