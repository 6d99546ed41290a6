#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqakit/core.hpp"
#include "sqakit/runner.hpp"

namespace sqakit::report {

class ReportError : public std::runtime_error {
public:
    enum class Kind { CorpusMismatch, UnknownBaseline, DuplicateRow, Malformed };

    ReportError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Serialized metrics per row; with_solved additionally embeds the solved
/// sample-id sets used for intersection analysis.
nlohmann::ordered_json rows_json(Task task, const std::vector<runner::RowOutcome>& rows,
                                 bool with_solved);

/// Single-run table (no baseline column).
std::string render_markdown(Task task, const std::string& label,
                            const std::vector<runner::RowOutcome>& rows);

struct ReportOptions {
    std::string baseline_id;
    long min_intersection = 0; // display filter only
};

struct RenderedReport {
    nlohmann::ordered_json json;
    std::string markdown;
};

/// Combines rows from several run manifests into one comparison table with
/// relative deltas against the baseline row, plus an intersection table of
/// solved samples. Manifests must share task and corpus hash.
RenderedReport build_report(const std::vector<std::filesystem::path>& manifest_paths,
                            const ReportOptions& options);

} // namespace sqakit::report
