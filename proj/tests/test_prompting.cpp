#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sqakit/prompting.hpp"

using namespace sqakit;
using namespace sqakit::prompting;

namespace {

dataset::FLSample fl_sample() {
    dataset::FLSample s;
    s.id = "fl-golden";
    s.source_code = "def mid(a, b, c):\n    m = c\n    if b < c:\n        m = b\n    return m\n";
    s.code_description = "Returns the median of three numbers.";
    s.test_results.push_back(dataset::TestOutcome{
        "mid(2, 1, 3)", dataset::WrongOutputOutcome{"1", "2"}});
    s.test_results.push_back(dataset::TestOutcome{
        "mid(None, 1, 2)", dataset::ErrorOutcome{"TypeError", 3, "if b < c:"}});
    s.ground_truth_lines = {4};
    return s;
}

sbfl::SuspiciousnessRanking fl_hints() {
    sbfl::SuspiciousnessRanking r;
    r.technique_name = "Ochiai";
    r.entries = {{4, "m = b", 0.8944},
                 {3, "if b < c:", 0.7071},
                 {2, "m = c", 0.5},
                 {5, "return m", 0.4082},
                 {1, "def mid(a, b, c):", 0.0}};
    return r;
}

dataset::VDSample vd_sample() {
    dataset::VDSample s;
    s.id = "vd-golden";
    s.source_code = "char *copy(char *dst, const char *src) { return strcpy(dst, src); }";
    s.label = Verdict::Vulnerable;
    return s;
}

retrieval::ExampleSelection selection() {
    retrieval::ExampleSelection sel;
    sel.random_examples = {
        {"t1", "int a(void) { return 1; }", Verdict::NonVulnerable},
        {"t2", "void b(char *p) { gets(p); }", Verdict::Vulnerable},
        {"t3", "int c(int x) { return x * 2; }", Verdict::NonVulnerable},
    };
    sel.similar_examples = {
        {"t4", "char *d(char *p, char *q) { return strcat(p, q); }", Verdict::Vulnerable, 0.97},
        {"t5", "char *e(char *p) { return p; }", Verdict::NonVulnerable, 0.91},
        {"t6", "void f(char *p, int n) { memset(p, 0, n); }", Verdict::NonVulnerable, 0.80},
    };
    return sel;
}

} // namespace

TEST_CASE("fl initial prompt carries every block in order with exact anchors") {
    const PromptBundle bundle = build_fl_initial(fl_sample(), fl_hints());
    REQUIRE(bundle.messages.size() == 1);
    CHECK(bundle.messages.front().role == Role::User);
    CHECK(bundle.template_id == "fl_initial");
    CHECK(bundle.template_version == kTemplateVersion);

    const std::string& text = bundle.messages.front().text;
    const std::size_t code_pos = text.find("Faulty Code: def mid(a, b, c):");
    const std::size_t desc_pos = text.find("Code Description: Returns the median of three numbers.");
    const std::size_t tests_pos = text.find("Test Results: The code is producing incorrect results.");
    const std::size_t sbfl_pos = text.find("Spectrum-based Fault Localization Techniques Results:");
    const std::size_t closing_pos = text.find("Analyze the provided code and utilize the code "
                                              "description, test results, and SBFL techniques "
                                              "results");
    REQUIRE(code_pos != std::string::npos);
    REQUIRE(desc_pos != std::string::npos);
    REQUIRE(tests_pos != std::string::npos);
    REQUIRE(sbfl_pos != std::string::npos);
    REQUIRE(closing_pos != std::string::npos);
    CHECK(code_pos < desc_pos);
    CHECK(desc_pos < tests_pos);
    CHECK(tests_pos < sbfl_pos);
    CHECK(sbfl_pos < closing_pos);

    // Wrong-output bullet shape.
    CHECK(text.find("- Running the function as follows 'mid(2, 1, 3)' yields '1' instead of the "
                    "expected '2'.") != std::string::npos);
    // Error bullet shape.
    CHECK(text.find("- Running the function as follows 'mid(None, 1, 2)' generate an 'TypeError' "
                    "in line 3 'if b < c:'.") != std::string::npos);
    // Numbered SBFL block with fixed-precision scores.
    CHECK(text.find("1. Line 4 'm = b', Ochiai score: 0.8944") != std::string::npos);
    CHECK(text.find("5. Line 1 'def mid(a, b, c):', Ochiai score: 0.0000") != std::string::npos);
    // JSON template and the ordering instruction, verbatim.
    CHECK(text.find("{\"faultLoc\": [ { \"faultyLine\":") != std::string::npos);
    CHECK(text.find("Ensure that the objects in the \"faultLoc\" array are sorted in descending "
                    "order of suspicion.") != std::string::npos);
}

TEST_CASE("fl builder rejects empty hints and is byte deterministic") {
    CHECK_THROWS_AS(build_fl_initial(fl_sample(), sbfl::SuspiciousnessRanking{}), PromptError);
    const PromptBundle a = build_fl_initial(fl_sample(), fl_hints());
    const PromptBundle b = build_fl_initial(fl_sample(), fl_hints());
    CHECK(a.messages.front().text == b.messages.front().text);
}

TEST_CASE("vd initial prompt: example blocks, verdict strings, code") {
    const PromptBundle bundle = build_vd_initial(vd_sample(), selection(), /*cot=*/false);
    REQUIRE(bundle.messages.size() == 1);
    CHECK(bundle.template_id == "vd_initial");
    const std::string& text = bundle.messages.front().text;

    const std::size_t sampled = text.find("Here are sampled examples from the training data.");
    const std::size_t similar = text.find("Here are the most similar codes from the training data.");
    const std::size_t instruction = text.find(
        "Now you need to identify whether a method contains a vulnerability or not. If it has any "
        "potential vulnerability, output: 'this code is vulnerable'. Otherwise, output: 'this "
        "code is non-vulnerable'.");
    const std::size_t code = text.find("The code is char *copy(");
    REQUIRE(sampled != std::string::npos);
    REQUIRE(similar != std::string::npos);
    REQUIRE(instruction != std::string::npos);
    REQUIRE(code != std::string::npos);
    CHECK(sampled < similar);
    CHECK(similar < instruction);
    CHECK(instruction < code);

    CHECK(text.find("Example1: int a(void) { return 1; }, Label1: this code is Non-vulnerable.") !=
          std::string::npos);
    CHECK(text.find("Example2: void b(char *p) { gets(p); }, Label2: this code is Vulnerable.") !=
          std::string::npos);
    // Similar block restarts numbering.
    CHECK(text.find("Example1: char *d(char *p, char *q) { return strcat(p, q); }, Label1: this "
                    "code is Vulnerable.") != std::string::npos);
    // No reasoning instruction without cot.
    CHECK(text.find("step-by-step reasoning") == std::string::npos);
}

TEST_CASE("cot toggle appends exactly the reasoning sentence") {
    const PromptBundle plain = build_vd_initial(vd_sample(), selection(), false);
    const PromptBundle cot = build_vd_initial(vd_sample(), selection(), true);
    CHECK(cot.template_id == "vd_initial_cot");
    CHECK(cot.messages.front().text ==
          plain.messages.front().text + "\n" + kCotSentence);
    CHECK(std::string(kCotSentence).find("step-by-step reasoning on why the code is potentially "
                                         "vulnerable or non-vulnerable") != std::string::npos);
}

TEST_CASE("validation bundle embeds history and ends with the ensure sentence") {
    const PromptBundle initial = build_fl_initial(fl_sample(), fl_hints());
    const std::string own = "{\"faultLoc\": [{\"faultyLine\": 2, \"code\": \"m = c\"}]}";
    const std::string other = "{\"faultLoc\": [{\"faultyLine\": 4, \"code\": \"m = b\"}]}";

    const PromptBundle bundle =
        build_validation(Task::FaultLocalization, initial, own, other, fl_ensure());
    REQUIRE(bundle.messages.size() == 3);
    CHECK(bundle.messages[0].role == Role::User);
    CHECK(bundle.messages[1].role == Role::Assistant);
    CHECK(bundle.messages[2].role == Role::User);
    CHECK(bundle.template_id == "fl_validation");

    CHECK(bundle.messages[0].text == initial.messages.front().text);
    CHECK(bundle.messages[1].text == own);

    const std::string& request = bundle.messages[2].text;
    CHECK(request.find(std::string(kValidationAnswerPrefix) + other) != std::string::npos);
    const std::string ensure_sentence = fl_ensure().text;
    REQUIRE(request.size() >= ensure_sentence.size());
    CHECK(request.substr(request.size() - ensure_sentence.size()) == ensure_sentence);
}

TEST_CASE("vd validation ends with the vd ensure sentence") {
    const PromptBundle initial = build_vd_initial(vd_sample(), selection(), false);
    const PromptBundle bundle = build_validation(Task::VulnerabilityDetection, initial,
                                                 "this code is vulnerable",
                                                 "this code is non-vulnerable", vd_ensure());
    const std::string& request = bundle.messages[2].text;
    const std::string ensure_sentence = vd_ensure().text;
    CHECK(request.substr(request.size() - ensure_sentence.size()) == ensure_sentence);
    CHECK(ensure_sentence.find("If it has any potential vulnerability, output: 'this code is "
                               "vulnerable'. Otherwise, output: 'this code is non-vulnerable'.") !=
          std::string::npos);
}

TEST_CASE("identical answers still produce a well-formed validation bundle") {
    const PromptBundle initial = build_vd_initial(vd_sample(), selection(), false);
    const std::string same = "this code is vulnerable";
    const PromptBundle bundle =
        build_validation(Task::VulnerabilityDetection, initial, same, same, vd_ensure());
    CHECK(bundle.messages.size() == 3);
    CHECK(bundle.messages[1].text == same);
}

TEST_CASE("ensure task mismatch is rejected") {
    const PromptBundle initial = build_fl_initial(fl_sample(), fl_hints());
    CHECK_THROWS_AS(build_validation(Task::FaultLocalization, initial, "a", "b", vd_ensure()),
                    PromptError);
}
