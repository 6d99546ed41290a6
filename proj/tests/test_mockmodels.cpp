#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sqakit/mockmodels.hpp"
#include "sqakit/parsing.hpp"

using namespace sqakit;
using namespace sqakit::mockmodels;

namespace {

prompting::PromptBundle user_bundle(const std::string& text, const std::string& template_id) {
    prompting::PromptBundle b;
    b.messages.push_back({prompting::Role::User, text});
    b.template_id = template_id;
    b.template_version = prompting::kTemplateVersion;
    return b;
}

} // namespace

TEST_CASE("constant script parses into a vulnerable verdict") {
    const MockScript script = MockScript::from_json(R"({"default": "this code is vulnerable"})");
    const gateway::RawResponse r =
        mock_complete(user_bundle("anything", "vd_initial"), script, "mock-1");
    CHECK(r.model_id == "mock-1");
    CHECK(parsing::parse_vd(r.text).verdict == Verdict::Vulnerable);
    CHECK_FALSE(r.request_fingerprint.empty());
}

TEST_CASE("first matching rule wins and matching is total via default") {
    const MockScript script = MockScript::from_json(R"({
        "rules": [
            {"match": {"contains": "alpha"}, "respond": {"text": "A"}},
            {"match": {"contains": "alp"},   "respond": {"text": "B"}}
        ],
        "default": "D"})");
    CHECK(render_response(user_bundle("has alpha inside", "t"), script) == "A");
    CHECK(render_response(user_bundle("only alp here", "t"), script) == "B");
    CHECK(render_response(user_bundle("nothing relevant", "t"), script) == "D");
}

TEST_CASE("template_id and contains conditions combine") {
    const MockScript script = MockScript::from_json(R"({
        "rules": [
            {"match": {"template_id": "fl_validation", "contains": "line 7"},
             "respond": {"text": "matched"}}
        ],
        "default": "no"})");
    CHECK(render_response(user_bundle("about line 7", "fl_validation"), script) == "matched");
    CHECK(render_response(user_bundle("about line 7", "fl_initial"), script) == "no");
    CHECK(render_response(user_bundle("about line 8", "fl_validation"), script) == "no");
}

TEST_CASE("regex rules substitute captures") {
    const MockScript script = MockScript::from_json(R"json({
        "rules": [
            {"match": {"regex": "sample id ([a-z0-9-]+)"},
             "respond": {"text": "{\"faultLoc\": [{\"faultyLine\": 1, \"code\": \"$1\"}]}"}}
        ],
        "default": "none"})json");
    const std::string out =
        render_response(user_bundle("considering sample id fl-03 now", "fl_initial"), script);
    CHECK(out.find("fl-03") != std::string::npos);
    CHECK(parsing::parse_fl(out).locations.front().code == "fl-03");
}

TEST_CASE("echo_assistant models a never-revising llm") {
    const MockScript script = MockScript::from_json(R"({
        "rules": [{"match": {"template_id": "fl_validation"},
                   "respond": {"kind": "echo_assistant"}}],
        "default": "initial answer"})");

    prompting::PromptBundle validation;
    validation.template_id = "fl_validation";
    validation.messages = {
        {prompting::Role::User, "the initial prompt"},
        {prompting::Role::Assistant, "my previous answer"},
        {prompting::Role::User, "another answer ..."},
    };
    CHECK(render_response(validation, script) == "my previous answer");
    CHECK(render_response(user_bundle("fresh prompt", "fl_initial"), script) == "initial answer");
}

TEST_CASE("echo_other_answer extracts the embedded answer from validation prompts") {
    const MockScript script = MockScript::from_json(R"({
        "rules": [{"match": {"template_id": "vd_validation"},
                   "respond": {"kind": "echo_other_answer"}}],
        "default": "this code is non-vulnerable"})");

    prompting::PromptBundle initial = user_bundle("is it vulnerable?", "vd_initial");
    const prompting::PromptBundle validation = prompting::build_validation(
        Task::VulnerabilityDetection, initial, "this code is non-vulnerable",
        "careful analysis... this code is vulnerable", prompting::vd_ensure());
    CHECK(render_response(validation, script) == "careful analysis... this code is vulnerable");
    // Non-validation bundles fall through to the default.
    CHECK(render_response(initial, script) == "this code is non-vulnerable");
}

TEST_CASE("scripts without a default are rejected") {
    CHECK_THROWS(MockScript::from_json(R"({"rules": []})"));
    CHECK_THROWS(MockScript::from_json("not json"));
    CHECK_THROWS(MockScript::from_json(R"({"rules": [{"respond": {"kind": "nope"}}], "default": ""})"));
}

TEST_CASE("mock backend satisfies the gateway backend contract") {
    const MockScript script = MockScript::from_json(R"({"default": "stable"})");
    MockBackend backend(script);
    gateway::ModelConfig cfg;
    cfg.model_id = "mock";
    const std::string a = backend.complete(user_bundle("x", "t"), cfg, {});
    const std::string b = backend.complete(user_bundle("x", "t"), cfg, {});
    CHECK(a == "stable");
    CHECK(a == b);
}
