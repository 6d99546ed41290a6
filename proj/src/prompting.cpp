#include "sqakit/prompting.hpp"

namespace sqakit::prompting {

std::string_view to_string(Role role) {
    return role == Role::User ? "user" : "assistant";
}

namespace {

constexpr const char* kFlEnsureSentence =
    "Ensure that the objects in the \"faultLoc\" array are sorted in descending order of "
    "suspicion.";

constexpr const char* kVdInstructionSentences =
    "Now you need to identify whether a method contains a vulnerability or not. If it has any "
    "potential vulnerability, output: 'this code is vulnerable'. Otherwise, output: 'this code is "
    "non-vulnerable'.";

constexpr const char* kFlClosingInstruction =
    "Analyze the provided code and utilize the code description, test results, and SBFL "
    "techniques results to help in identifying potentially faulty lines. Provide the results "
    "following this JSON template: {\"faultLoc\": [ { \"faultyLine\": (line number of the "
    "suspicious code), \"code\": (displaying the actual code), \"explanation\": (step-by-step "
    "reasoning on why this location is considered potentially faulty) }, ... ] }. Ensure that the "
    "objects in the \"faultLoc\" array are sorted in descending order of suspicion.";

std::string example_label(Verdict v) {
    return v == Verdict::Vulnerable ? "Vulnerable" : "Non-vulnerable";
}

std::string render_test_outcome(const dataset::TestOutcome& t) {
    if (const auto* e = std::get_if<dataset::ErrorOutcome>(&t.kind)) {
        return "- Running the function as follows '" + t.input_repr + "' generate an '" +
               e->error_name + "' in line " + std::to_string(e->line) + " '" + e->code_content +
               "'.";
    }
    const auto& w = std::get<dataset::WrongOutputOutcome>(t.kind);
    return "- Running the function as follows '" + t.input_repr + "' yields '" + w.actual +
           "' instead of the expected '" + w.expected + "'.";
}

} // namespace

EnsureClause fl_ensure() {
    return EnsureClause{Task::FaultLocalization, kFlEnsureSentence};
}

EnsureClause vd_ensure() {
    return EnsureClause{Task::VulnerabilityDetection, kVdInstructionSentences};
}

EnsureClause ensure_for(Task task) {
    return task == Task::FaultLocalization ? fl_ensure() : vd_ensure();
}

PromptBundle build_fl_initial(const dataset::FLSample& sample,
                              const sbfl::SuspiciousnessRanking& hints) {
    if (hints.entries.empty()) {
        throw PromptError(PromptError::Kind::EmptyHints,
                          "fault localization prompt needs at least one SBFL hint");
    }

    std::string text;
    text += "Faulty Code: " + sample.source_code + "\n\n";
    text += "Code Description: " + sample.code_description + "\n\n";
    text += "Test Results: The code is producing incorrect results.";
    for (const dataset::TestOutcome& t : sample.test_results) {
        text += "\n" + render_test_outcome(t);
    }
    text += "\n\nSpectrum-based Fault Localization Techniques Results:";
    int n = 0;
    for (const sbfl::RankedLine& entry : hints.entries) {
        text += "\n" + std::to_string(++n) + ". Line " + std::to_string(entry.line) + " '" +
                entry.code + "', " + hints.technique_name +
                " score: " + format_fixed(entry.score, 4);
    }
    text += "\n\n";
    text += kFlClosingInstruction;

    return PromptBundle{{{Role::User, std::move(text)}}, GenerationParams{}, "fl_initial",
                        kTemplateVersion};
}

PromptBundle build_vd_initial(const dataset::VDSample& sample,
                              const retrieval::ExampleSelection& selection, bool cot) {
    std::string text;
    text += "Here are sampled examples from the training data.";
    int n = 0;
    for (const retrieval::LabeledExample& ex : selection.random_examples) {
        ++n;
        text += "\nExample" + std::to_string(n) + ": " + ex.code + ", Label" + std::to_string(n) +
                ": this code is " + example_label(ex.label) + ".";
    }
    text += "\n\nHere are the most similar codes from the training data.";
    n = 0;
    for (const retrieval::SimilarExample& ex : selection.similar_examples) {
        ++n;
        text += "\nExample" + std::to_string(n) + ": " + ex.code + ", Label" + std::to_string(n) +
                ": this code is " + example_label(ex.label) + ".";
    }
    text += "\n\n";
    text += kVdInstructionSentences;
    text += "\n\nThe code is " + sample.source_code;
    if (cot) {
        text += "\n";
        text += kCotSentence;
    }

    return PromptBundle{{{Role::User, std::move(text)}},
                        GenerationParams{},
                        cot ? "vd_initial_cot" : "vd_initial",
                        kTemplateVersion};
}

PromptBundle build_validation(Task task, const PromptBundle& initial,
                              const std::string& own_answer_raw, const std::string& other_answer_raw,
                              const EnsureClause& ensure) {
    if (ensure.task != task) {
        throw PromptError(PromptError::Kind::EnsureTaskMismatch,
                          "ensure clause does not belong to the requested task");
    }

    std::string request = kValidationAnswerPrefix + other_answer_raw + kValidationAnswerSuffix +
                          " " + ensure.text;

    PromptBundle bundle;
    bundle.messages.push_back(initial.messages.front());
    bundle.messages.push_back({Role::Assistant, own_answer_raw});
    bundle.messages.push_back({Role::User, std::move(request)});
    bundle.params = initial.params;
    bundle.template_id = task == Task::FaultLocalization ? "fl_validation" : "vd_validation";
    bundle.template_version = kTemplateVersion;
    return bundle;
}

} // namespace sqakit::prompting
