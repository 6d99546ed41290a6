// Acceptance suite: one check per release criterion, each printed as a
// single [PASS]/[FAIL] line with its runtime. Criteria 6 and 7 drive the
// installed CLI binary (SQAKIT_BIN) against the committed fixtures
// (SQAKIT_FIXTURES); everything else runs in-process.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqakit/ensemble.hpp"
#include "sqakit/evaluation.hpp"
#include "sqakit/io.hpp"
#include "sqakit/parsing.hpp"
#include "sqakit/prompting.hpp"
#include "sqakit/sbfl.hpp"

using namespace sqakit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw Failure(message);
}

// ---------------------------------------------------------------------------
// Subprocess helpers for the CLI-facing criteria.

std::string env_or_fail(const char* name) {
    const char* value = std::getenv(name);
    require(value != nullptr && *value != '\0',
            std::string(name) + " must point at the build output / fixtures");
    return value;
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::string command = "'" + env_or_fail("SQAKIT_BIN") + "'";
    for (const std::string& arg : args) command += " '" + arg + "'";
    command += " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    require(pipe != nullptr, "failed to spawn: " + command);
    CliResult result;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
    result.exit_code = pclose(pipe);
    return result;
}

void require_cli_ok(const CliResult& result, const std::string& what) {
    require(result.exit_code == 0,
            what + " exited nonzero:\n" + result.output.substr(0, 2000));
}

// ---------------------------------------------------------------------------
// Criterion 1: metric fidelity against the reference table values.

void criterion_metric_fidelity() {
    // Confusion matrix realizing P=76.3, R=36.8 on the 193/193 test split.
    const evaluation::ClassificationMetrics m =
        evaluation::metrics_from_confusion(71, 22, 171, 122);
    require(std::abs(m.precision * 100.0 - 76.3) <= 0.1, "precision mapping drifted");
    require(std::abs(m.recall * 100.0 - 36.8) <= 0.1, "recall mapping drifted");
    require(std::abs(m.f1 * 100.0 - 49.7) <= 0.1,
            "F1 expected 49.7 +/- 0.1, got " + format_fixed(m.f1 * 100.0, 3));
    require(std::abs(m.f0_5 * 100.0 - 62.8) <= 0.1,
            "F0.5 expected 62.8 +/- 0.1, got " + format_fixed(m.f0_5 * 100.0, 3));

    struct DeltaCase {
        double value, baseline, expected;
    };
    for (const DeltaCase c : {DeltaCase{221, 197, 12.18}, DeltaCase{220, 197, 11.68},
                              DeltaCase{167, 197, -15.22}}) {
        const double rounded =
            evaluation::round_percent(evaluation::relative_delta(c.value, c.baseline));
        require(std::abs(rounded - c.expected) < 1e-9,
                "delta(" + format_fixed(c.value, 0) + ", " + format_fixed(c.baseline, 0) +
                    ") expected " + format_fixed(c.expected, 2) + ", got " +
                    format_fixed(rounded, 2));
    }
}

// ---------------------------------------------------------------------------
// Criterion 2: voting fidelity on the reference example and tie rule.

parsing::FLAnswer fl_answer(std::vector<int> lines) {
    parsing::FLAnswer a;
    for (int line : lines) a.locations.push_back(parsing::FaultLocation{line, "", std::nullopt});
    return a;
}

void criterion_voting_fidelity() {
    const ensemble::PriorityOrder priority{"m1", "m2", "m3", "m4"};
    const std::map<std::string, parsing::FLAnswer> example{
        {"m1", fl_answer({2})},
        {"m2", fl_answer({3})},
        {"m3", fl_answer({2})},
        {"m4", fl_answer({2})},
    };
    const ensemble::EnsembleVerdict fl = ensemble::vote_fl(example, priority, 3);
    require(!fl.final_lines.empty() && fl.final_lines.front() == 2,
            "votes {2,3,2,2} must elect line 2");

    parsing::VDAnswer v;
    v.verdict = Verdict::Vulnerable;
    parsing::VDAnswer nv;
    nv.verdict = Verdict::NonVulnerable;
    const std::map<std::string, parsing::VDAnswer> vd_votes{
        {"m1", v}, {"m2", v}, {"m3", nv}, {"m4", v}};
    require(ensemble::vote_vd(vd_votes, priority).final_verdict == Verdict::Vulnerable,
            "votes {V,V,NV,V} must classify vulnerable");

    // Tie: the priority head (m1) proposed line 9.
    const std::map<std::string, parsing::FLAnswer> tie{
        {"m1", fl_answer({9})},
        {"m2", fl_answer({7})},
        {"m3", fl_answer({9})},
        {"m4", fl_answer({7})},
    };
    const ensemble::EnsembleVerdict tied = ensemble::vote_fl(tie, priority, 1);
    require(tied.final_lines == std::vector<int>{9}, "tie must resolve to the head's candidate");
    require(tied.tiebreaks_fired.size() == 1 && tied.tiebreaks_fired.front().chosen_by == "m1",
            "tie provenance must name the head model");
}

// ---------------------------------------------------------------------------
// Criterion 3: randomized voting equivalence against a brute-force voter.

std::vector<int> brute_force_vote(const std::map<std::string, parsing::FLAnswer>& answers,
                                  const ensemble::PriorityOrder& priority, int k_max) {
    auto priority_index = [&priority](const std::string& model) {
        for (std::size_t i = 0; i < priority.size(); ++i) {
            if (priority[i] == model) return static_cast<long>(i);
        }
        return static_cast<long>(priority.size());
    };
    std::vector<int> final_lines;
    for (int rank = 1; rank <= k_max; ++rank) {
        struct Candidate {
            int line;
            long votes = 0;
            long best_voter = std::numeric_limits<long>::max();
        };
        std::vector<Candidate> candidates;
        for (const auto& [model, answer] : answers) {
            if (static_cast<int>(answer.locations.size()) < rank) continue;
            const int line = answer.locations[static_cast<std::size_t>(rank - 1)].line;
            Candidate* c = nullptr;
            for (Candidate& existing : candidates) {
                if (existing.line == line) c = &existing;
            }
            if (c == nullptr) {
                candidates.push_back(Candidate{line, 0, std::numeric_limits<long>::max()});
                c = &candidates.back();
            }
            c->votes += 1;
            c->best_voter = std::min(c->best_voter, priority_index(model));
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const Candidate& a, const Candidate& b) {
                      if (a.votes != b.votes) return a.votes > b.votes;
                      return a.best_voter < b.best_voter;
                  });
        for (const Candidate& c : candidates) {
            if (std::find(final_lines.begin(), final_lines.end(), c.line) == final_lines.end()) {
                final_lines.push_back(c.line);
                break;
            }
        }
    }
    return final_lines;
}

void criterion_voting_oracle() {
    std::mt19937 rng(1000003);
    long mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::map<std::string, parsing::FLAnswer> answers;
        ensemble::PriorityOrder priority;
        const int models = 1 + static_cast<int>(rng() % 6);
        for (int m = 0; m < models; ++m) {
            const std::string id = "model-" + std::to_string(m);
            priority.push_back(id);
            std::vector<int> lines;
            std::set<int> used;
            const int length = static_cast<int>(rng() % 4); // 0..3
            for (int i = 0; i < length; ++i) {
                int line = 1 + static_cast<int>(rng() % 10);
                while (used.count(line) > 0) line = 1 + static_cast<int>(rng() % 10);
                used.insert(line);
                lines.push_back(line);
            }
            answers[id] = fl_answer(lines);
        }
        std::shuffle(priority.begin(), priority.end(), rng);
        const std::vector<int> actual = ensemble::vote_fl(answers, priority, 3).final_lines;
        if (actual != brute_force_vote(answers, priority, 3)) ++mismatches;
    }
    require(mismatches == 0, std::to_string(mismatches) + " voting mismatches out of 1000");
}

// ---------------------------------------------------------------------------
// Criterion 4: SBFL properties and ranking oracle.

void criterion_sbfl() {
    for (long e_f = 0; e_f <= 10; ++e_f) {
        for (long n_f = 0; n_f <= 10; ++n_f) {
            for (long e_p = 0; e_p <= 10; ++e_p) {
                const double score = sbfl::ochiai_score(e_f, n_f, e_p);
                require(score >= 0.0 && score <= 1.0, "score out of [0,1]");
                require((score == 0.0) == (e_f == 0), "zero-iff-e_f=0 violated");
                if (e_f < 10) {
                    require(sbfl::ochiai_score(e_f + 1, n_f, e_p) >= score - 1e-12,
                            "monotonicity in e_f violated");
                }
            }
        }
    }

    std::mt19937 rng(77777);
    for (int trial = 0; trial < 200; ++trial) {
        const int lines = 1 + static_cast<int>(rng() % 12);
        sbfl::CoverageSpectrum spectrum;
        spectrum.line_count = lines;
        spectrum.failing_total = 1 + static_cast<long>(rng() % 8);
        spectrum.passing_total = 1 + static_cast<long>(rng() % 12);
        std::string source;
        for (int i = 1; i <= lines; ++i) {
            spectrum.lines.push_back(sbfl::LineCoverage{
                i, static_cast<long>(rng() % (spectrum.failing_total + 1)),
                static_cast<long>(rng() % (spectrum.passing_total + 1))});
            source += "line_" + std::to_string(i) + "\n";
        }
        const sbfl::SuspiciousnessRanking ranking = sbfl::rank_lines(spectrum, source);

        // Brute force: repeated max extraction over independently computed scores.
        std::vector<std::pair<int, double>> scored;
        for (const sbfl::LineCoverage& cov : spectrum.lines) {
            const double denom =
                std::sqrt(static_cast<double>(spectrum.failing_total)) *
                std::sqrt(static_cast<double>(cov.covered_failing + cov.covered_passing));
            scored.emplace_back(
                cov.line, denom == 0.0 ? 0.0 : static_cast<double>(cov.covered_failing) / denom);
        }
        std::vector<int> expected;
        while (!scored.empty()) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < scored.size(); ++i) {
                if (scored[i].second > scored[best].second ||
                    (scored[i].second == scored[best].second &&
                     scored[i].first < scored[best].first)) {
                    best = i;
                }
            }
            expected.push_back(scored[best].first);
            scored.erase(scored.begin() + static_cast<long>(best));
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            require(ranking.entries[i].line == expected[i], "ranking differs from brute force");
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 5: parser robustness.

void criterion_parsers() {
    std::mt19937 rng(55555);
    auto prose = [&rng](std::size_t length) {
        static const std::string alphabet =
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ ,.:;!?'\"`-_=()[]\n\t";
        std::string out;
        for (std::size_t i = 0; i < length; ++i) out += alphabet[rng() % alphabet.size()];
        return out;
    };

    // 500 generated payloads wrapped in prose parse back to ground truth.
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 5);
        std::set<int> used;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        std::vector<std::pair<int, std::string>> truth;
        for (int i = 0; i < n; ++i) {
            int line = 1 + static_cast<int>(rng() % 50);
            while (used.count(line) > 0) line = 1 + static_cast<int>(rng() % 50);
            used.insert(line);
            const std::string code = "stmt_" + std::to_string(rng() % 1000);
            truth.emplace_back(line, code);
            arr.push_back({{"faultyLine", line}, {"code", code}});
        }
        nlohmann::ordered_json root;
        root["faultLoc"] = arr;
        const std::string raw = prose(rng() % 100) + root.dump() + prose(rng() % 100);
        const parsing::FLAnswer parsed = parsing::parse_fl(raw);
        require(parsed.locations.size() == truth.size(), "payload entry count changed");
        for (std::size_t i = 0; i < truth.size(); ++i) {
            require(parsed.locations[i].line == truth[i].first &&
                        parsed.locations[i].code == truth[i].second,
                    "payload entry drifted");
        }
    }

    // Every ordering/casing combination of the two verdict phrases.
    const std::string v = "this code is vulnerable";
    const std::string nv = "this code is non-vulnerable";
    auto upper = [](std::string s) {
        for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return s;
    };
    struct Case {
        std::string text;
        Verdict expected;
    };
    const std::vector<Case> cases{
        {v, Verdict::Vulnerable},
        {nv, Verdict::NonVulnerable},
        {upper(v), Verdict::Vulnerable},
        {upper(nv), Verdict::NonVulnerable},
        {v + " ... " + nv, Verdict::NonVulnerable},
        {nv + " ... " + v, Verdict::Vulnerable},
        {upper(v) + " then " + nv, Verdict::NonVulnerable},
        {upper(nv) + " then " + v, Verdict::Vulnerable},
        {v + " " + nv + " " + v, Verdict::Vulnerable},
        {nv + " " + v + " " + nv, Verdict::NonVulnerable},
    };
    for (const Case& c : cases) {
        require(parsing::parse_vd(c.text).verdict == c.expected,
                "verdict resolution failed for: " + c.text);
    }

    // Fuzz smoke: parsers return a value or a typed error on arbitrary bytes.
    for (int trial = 0; trial < 10000; ++trial) {
        std::string junk;
        const std::size_t length = rng() % 120;
        for (std::size_t i = 0; i < length; ++i) junk += static_cast<char>(rng() % 256);
        try {
            (void)parsing::parse_fl(junk);
        } catch (const parsing::ParseError&) {
        }
        try {
            (void)parsing::parse_vd(junk);
        } catch (const parsing::ParseError&) {
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 6: prompt bit-exactness through the CLI.

void criterion_prompt_golden() {
    const fs::path fixtures = env_or_fail("SQAKIT_FIXTURES");

    const CliResult fl = run_cli({"render-prompt", "--corpus",
                                  (fixtures / "golden/fl_corpus").string(), "--sample",
                                  "fl-golden"});
    require_cli_ok(fl, "render-prompt (fl)");
    require(fl.output == io::read_file(fixtures / "golden/fl_initial.golden.txt"),
            "fl initial prompt differs from the golden file");

    const CliResult vd = run_cli({"render-prompt", "--corpus",
                                  (fixtures / "golden/vd_corpus").string(), "--sample",
                                  "vd-golden", "--seed", "7"});
    require_cli_ok(vd, "render-prompt (vd)");
    require(vd.output == io::read_file(fixtures / "golden/vd_initial.golden.txt"),
            "vd initial prompt differs from the golden file");

    const CliResult cot = run_cli({"render-prompt", "--corpus",
                                   (fixtures / "golden/vd_corpus").string(), "--sample",
                                   "vd-golden", "--seed", "7", "--cot"});
    require_cli_ok(cot, "render-prompt (vd --cot)");
    require(cot.output == io::read_file(fixtures / "golden/vd_initial_cot.golden.txt"),
            "vd cot prompt differs from the golden file");

    // The cot toggle adds exactly the reasoning sentence (before the
    // rendered trailing newline).
    const std::string plain = vd.output;
    require(!plain.empty() && plain.back() == '\n', "render-prompt must end with newline");
    const std::string expected_cot = plain.substr(0, plain.size() - 1) + "\n" +
                                     std::string(prompting::kCotSentence) + "\n";
    require(cot.output == expected_cot, "cot toggle changed more than the reasoning sentence");

    // Verbatim anchors inside the rendered prompts.
    for (const char* anchor :
         {"Ensure that the objects in the \"faultLoc\" array are sorted in descending order of "
          "suspicion.",
          "{\"faultLoc\": [ { \"faultyLine\":"}) {
        require(fl.output.find(anchor) != std::string::npos,
                std::string("fl prompt lost anchor: ") + anchor);
    }
    for (const char* anchor :
         {"this code is vulnerable", "this code is non-vulnerable",
          "If it has any potential vulnerability, output:"}) {
        require(vd.output.find(anchor) != std::string::npos,
                std::string("vd prompt lost anchor: ") + anchor);
    }
}

// ---------------------------------------------------------------------------
// Criterion 7: end-to-end replay determinism plus crossval adoption.

void criterion_replay_determinism() {
    const fs::path fixtures = env_or_fail("SQAKIT_FIXTURES");
    const fs::path scratch =
        fs::temp_directory_path() / ("sqakit_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(scratch);

    auto run_config = [&](const std::string& config, const std::string& mode,
                          const std::string& tag) {
        const fs::path out = scratch / tag;
        const CliResult r = run_cli({"run", "--config", (fixtures / "e2e" / config).string(),
                                     "--cache", mode, "--cache-dir", (scratch / "cache").string(),
                                     "--out", out.string()});
        require_cli_ok(r, "run " + config + " (" + mode + ")");
        return out;
    };

    for (const std::string config : {std::string("fl_vote.toml"), std::string("vd_vote.toml")}) {
        run_config(config, "record", config + ".record");
        const fs::path replay1 = run_config(config, "replay", config + ".replay1");
        const fs::path replay2 = run_config(config, "replay", config + ".replay2");
        require(io::read_file(replay1 / "results.jsonl") ==
                    io::read_file(replay2 / "results.jsonl"),
                config + ": results.jsonl differs across replays");
        require(io::read_file(replay1 / "report.json") == io::read_file(replay2 / "report.json"),
                config + ": report.json differs across replays");
    }

    // CrossVal with the always-concedes mock: the left model's final answer
    // equals the right model's initial answer, sample by sample.
    run_config("fl_crossval.toml", "record", "cv.record");
    const fs::path cv = run_config("fl_crossval.toml", "replay", "cv.replay");
    const auto records = io::read_jsonl(cv / "results.jsonl");
    require(records.size() == 10, "crossval run must cover the bundled 10 FL samples");
    for (const json& record : records) {
        json right_initial_lines;
        for (const json& m : record.at("models")) {
            if (m.at("model_id") == "m-echo") right_initial_lines = m.at("lines");
        }
        bool checked = false;
        for (const json& r : record.at("results")) {
            if (r.at("row") == "m-concede<=m-echo") {
                require(r.at("lines") == right_initial_lines,
                        record.at("sample_id").get<std::string>() +
                            ": conceded answer differs from the right model's initial answer");
                checked = true;
            }
        }
        require(checked, "crossval record missing the left row");
    }

    fs::remove_all(scratch);
}

// ---------------------------------------------------------------------------
// Criterion 8: intersection partition property.

void criterion_intersection_partition() {
    std::mt19937 rng(909090);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::string, std::set<std::string>> success;
        const int models = 2 + static_cast<int>(rng() % 4);
        for (int m = 0; m < models; ++m) {
            std::set<std::string> solved;
            for (int s = 0; s < 40; ++s) {
                if (rng() % 3 == 0) solved.insert("s" + std::to_string(s));
            }
            success["model-" + std::to_string(m)] = std::move(solved);
        }
        const evaluation::IntersectionTable table = evaluation::intersection_table(success);
        std::set<std::string> solved_union;
        for (const auto& [_, solved] : success) solved_union.insert(solved.begin(), solved.end());
        require(table.total() == static_cast<long>(solved_union.size()),
                "intersection counts do not partition the union");
    }
}

// ---------------------------------------------------------------------------

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<void()> body;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"1 metric fidelity vs reference tables", 1.0, criterion_metric_fidelity},
        {"2 voting fidelity (reference example, tie rule)", 1.0, criterion_voting_fidelity},
        {"3 voting equivalence vs brute-force oracle (1000 cases)", 30.0, criterion_voting_oracle},
        {"4 SBFL grid properties and ranking oracle", 10.0, criterion_sbfl},
        {"5 parser robustness (payloads, orderings, fuzz)", 60.0, criterion_parsers},
        {"6 prompt bit-exactness via render-prompt", 1.0, criterion_prompt_golden},
        {"7 end-to-end replay determinism and crossval adoption", 30.0,
         criterion_replay_determinism},
        {"8 intersection partition property (100 cases)", 5.0, criterion_intersection_partition},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        const auto started = std::chrono::steady_clock::now();
        std::string error;
        try {
            criterion.body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (error.empty() && elapsed > criterion.budget_seconds) {
            error = "exceeded " + format_fixed(criterion.budget_seconds, 1) + " s budget";
        }
        if (error.empty()) {
            std::cout << "[PASS] criterion " << criterion.name << " (" << format_fixed(elapsed, 3)
                      << " s)\n";
        } else {
            std::cout << "[FAIL] criterion " << criterion.name << ": " << error << "\n";
            ++failures;
        }
    }
    if (failures == 0) {
        std::cout << "acceptance: all " << criteria.size() << " criteria passed\n";
        return 0;
    }
    std::cout << "acceptance: " << failures << " of " << criteria.size() << " criteria failed\n";
    return 1;
}
