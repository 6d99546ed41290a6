#pragma once

#include <string>
#include <vector>

#include "sqakit/core.hpp"
#include "sqakit/dataset.hpp"
#include "sqakit/retrieval.hpp"
#include "sqakit/sbfl.hpp"

namespace sqakit::prompting {

class PromptError : public std::runtime_error {
public:
    enum class Kind { EmptyHints, EnsureTaskMismatch };

    PromptError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

enum class Role { User, Assistant };

std::string_view to_string(Role role);

struct Message {
    Role role = Role::User;
    std::string text;

    bool operator==(const Message&) const = default;
};

struct GenerationParams {
    double temperature = 0.0;
    int max_tokens = 2048;

    bool operator==(const GenerationParams&) const = default;
};

/// Prompt text plus the generation parameters that must accompany it.
/// Builders are byte-deterministic for fixed inputs.
struct PromptBundle {
    std::vector<Message> messages; // nonempty, first role is User
    GenerationParams params;
    std::string template_id;
    std::string template_version;

    bool operator==(const PromptBundle&) const = default;
};

/// Bump when any template wording changes; recorded in run manifests.
inline constexpr const char* kTemplateVersion = "1.0.0";

/// Reinstruction sentence appended to validation prompts, restating the
/// output contract of the task's initial prompt.
struct EnsureClause {
    Task task = Task::FaultLocalization;
    std::string text;
};

EnsureClause fl_ensure();
EnsureClause vd_ensure();
EnsureClause ensure_for(Task task);

/// Sentence appended to the vulnerability prompt when chain-of-thought
/// explanations are requested.
inline constexpr const char* kCotSentence =
    "Provide step-by-step reasoning on why the code is potentially vulnerable or non-vulnerable.";

/// Markers framing the other model's answer inside validation prompts.
/// Exposed so scripted mock backends can locate the embedded answer.
inline constexpr const char* kValidationAnswerPrefix =
    "Another LLM produced the following answer for the same problem: ";
inline constexpr const char* kValidationAnswerSuffix =
    ". Review your previous answer against it, then either confirm your answer or provide a "
    "revised answer in the same format.";

PromptBundle build_fl_initial(const dataset::FLSample& sample,
                              const sbfl::SuspiciousnessRanking& hints);

PromptBundle build_vd_initial(const dataset::VDSample& sample,
                              const retrieval::ExampleSelection& selection, bool cot);

/// Three-message bundle (User initial, Assistant own answer, User validation
/// request). History is embedded unconditionally; backends are stateless.
PromptBundle build_validation(Task task, const PromptBundle& initial,
                              const std::string& own_answer_raw, const std::string& other_answer_raw,
                              const EnsureClause& ensure);

} // namespace sqakit::prompting
