#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sqakit/config.hpp"
#include "sqakit/core.hpp"

namespace sqakit::runner {

class RunError : public std::runtime_error {
public:
    explicit RunError(const std::string& message) : std::runtime_error(message) {}
};

/// Per-configuration scoring accumulator. A "row" is one technique in the
/// report: a single model, the vote ensemble, or one side of a crossval pair.
struct RowOutcome {
    std::string row_id;
    long samples = 0;
    // Fault localization
    long top1 = 0, top2 = 0, top3 = 0;
    std::set<std::string> solved_top1, solved_top2, solved_top3;
    // Vulnerability detection
    long tp = 0, fp = 0, tn = 0, fn = 0;
    std::set<std::string> correct_ids;
};

struct SampleError {
    std::string sample_id;
    std::string stage; // prompt | gateway | parse | vote | crossval
    std::string detail;
};

struct RunResult {
    std::filesystem::path manifest_path;
    std::filesystem::path results_path;
    long sample_count = 0;
    long error_count = 0;
    std::vector<RowOutcome> rows;
};

/// Executes the configured experiment end to end: build prompts, dispatch,
/// parse, combine per mode, score, and write results.jsonl, manifest.json,
/// report.json and report.md under the output directory. Per-sample failures
/// are recorded and scored as incorrect, never aborting the run.
RunResult run(const config::RunConfig& config);

} // namespace sqakit::runner
