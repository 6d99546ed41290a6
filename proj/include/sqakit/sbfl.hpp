#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sqakit/core.hpp"

namespace sqakit::sbfl {

class SbflError : public std::runtime_error {
public:
    enum class Kind { LengthMismatch, UnknownTechnique, InvalidSpectrum };

    SbflError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Per-line coverage counters. n_f and n_p are derived from the per-sample
/// totals: n_f = failing_total - e_f, n_p = passing_total - e_p.
struct LineCoverage {
    int line = 0;
    long covered_failing = 0; // e_f
    long covered_passing = 0; // e_p

    bool operator==(const LineCoverage&) const = default;
};

struct CoverageSpectrum {
    int line_count = 0;
    long failing_total = 0;
    long passing_total = 0;
    std::vector<LineCoverage> lines; // dense, lines[i].line == i + 1

    bool operator==(const CoverageSpectrum&) const = default;
};

struct RankedLine {
    int line = 0;
    std::string code;
    double score = 0.0;

    bool operator==(const RankedLine&) const = default;
};

struct SuspiciousnessRanking {
    std::vector<RankedLine> entries; // scores non-increasing, lines unique
    std::string technique_name;
};

/// Ochiai suspiciousness: e_f / sqrt((e_f + n_f) * (e_f + e_p)).
/// Total over non-negative inputs; 0 when the denominator vanishes.
double ochiai_score(long covered_failing, long uncovered_failing, long covered_passing);

using ScoreFn = double (*)(long covered_failing, long uncovered_failing, long covered_passing);

/// Named suspiciousness formulas; "Ochiai" is registered by default.
void register_technique(const std::string& name, ScoreFn fn);
ScoreFn technique(const std::string& name); // throws UnknownTechnique

/// Scores every line of the sample and sorts by score descending, ties by
/// ascending line number. The spectrum must cover exactly the source lines.
SuspiciousnessRanking rank_lines(const CoverageSpectrum& spectrum, const std::string& source_code,
                                 const std::string& technique_name = "Ochiai");

SuspiciousnessRanking top_n_hints(const SuspiciousnessRanking& ranking, int n = 5);

CoverageSpectrum spectrum_from_json(const nlohmann::json& j);
nlohmann::json spectrum_to_json(const CoverageSpectrum& spectrum);

} // namespace sqakit::sbfl
