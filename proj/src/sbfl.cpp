#include "sqakit/sbfl.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace sqakit::sbfl {

double ochiai_score(long covered_failing, long uncovered_failing, long covered_passing) {
    const double denom_sq = static_cast<double>(covered_failing + uncovered_failing) *
                            static_cast<double>(covered_failing + covered_passing);
    if (denom_sq <= 0.0) return 0.0;
    return static_cast<double>(covered_failing) / std::sqrt(denom_sq);
}

namespace {

std::map<std::string, ScoreFn>& registry() {
    static std::map<std::string, ScoreFn> techniques{{"Ochiai", &ochiai_score}};
    return techniques;
}

} // namespace

void register_technique(const std::string& name, ScoreFn fn) {
    registry()[name] = fn;
}

ScoreFn technique(const std::string& name) {
    const auto it = registry().find(name);
    if (it == registry().end()) {
        throw SbflError(SbflError::Kind::UnknownTechnique, "unknown SBFL technique: " + name);
    }
    return it->second;
}

SuspiciousnessRanking rank_lines(const CoverageSpectrum& spectrum, const std::string& source_code,
                                 const std::string& technique_name) {
    const std::vector<std::string> lines = split_lines(source_code);
    if (spectrum.line_count != static_cast<int>(lines.size())) {
        throw SbflError(SbflError::Kind::LengthMismatch,
                        "spectrum covers " + std::to_string(spectrum.line_count) +
                            " lines but source has " + std::to_string(lines.size()));
    }
    const ScoreFn score = technique(technique_name);

    SuspiciousnessRanking ranking;
    ranking.technique_name = technique_name;
    ranking.entries.reserve(lines.size());
    for (const LineCoverage& cov : spectrum.lines) {
        const long n_f = spectrum.failing_total - cov.covered_failing;
        ranking.entries.push_back(RankedLine{
            cov.line,
            lines[static_cast<std::size_t>(cov.line - 1)],
            score(cov.covered_failing, n_f, cov.covered_passing),
        });
    }
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const RankedLine& a, const RankedLine& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.line < b.line;
                     });
    return ranking;
}

SuspiciousnessRanking top_n_hints(const SuspiciousnessRanking& ranking, int n) {
    SuspiciousnessRanking out;
    out.technique_name = ranking.technique_name;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(n, 0)),
                                                   ranking.entries.size());
    out.entries.assign(ranking.entries.begin(), ranking.entries.begin() + static_cast<long>(take));
    return out;
}

CoverageSpectrum spectrum_from_json(const nlohmann::json& j) {
    CoverageSpectrum s;
    s.line_count = j.at("line_count").get<int>();
    s.failing_total = j.at("failing_total").get<long>();
    s.passing_total = j.at("passing_total").get<long>();
    if (s.line_count <= 0 || s.failing_total < 0 || s.passing_total < 0) {
        throw SbflError(SbflError::Kind::InvalidSpectrum, "negative or empty spectrum totals");
    }
    // Dense layout; absent lines default to zero coverage.
    s.lines.resize(static_cast<std::size_t>(s.line_count));
    for (int i = 0; i < s.line_count; ++i) s.lines[static_cast<std::size_t>(i)].line = i + 1;
    for (const auto& entry : j.at("lines")) {
        const int line = entry.at("line").get<int>();
        if (line < 1 || line > s.line_count) {
            throw SbflError(SbflError::Kind::InvalidSpectrum,
                            "spectrum line " + std::to_string(line) + " out of range");
        }
        LineCoverage& cov = s.lines[static_cast<std::size_t>(line - 1)];
        cov.covered_failing = entry.at("e_f").get<long>();
        cov.covered_passing = entry.at("e_p").get<long>();
        if (cov.covered_failing < 0 || cov.covered_failing > s.failing_total ||
            cov.covered_passing < 0 || cov.covered_passing > s.passing_total) {
            throw SbflError(SbflError::Kind::InvalidSpectrum,
                            "coverage counts exceed totals at line " + std::to_string(line));
        }
    }
    return s;
}

nlohmann::json spectrum_to_json(const CoverageSpectrum& spectrum) {
    nlohmann::json lines = nlohmann::json::array();
    for (const LineCoverage& cov : spectrum.lines) {
        if (cov.covered_failing == 0 && cov.covered_passing == 0) continue;
        lines.push_back({{"line", cov.line}, {"e_f", cov.covered_failing}, {"e_p", cov.covered_passing}});
    }
    return {{"line_count", spectrum.line_count},
            {"failing_total", spectrum.failing_total},
            {"passing_total", spectrum.passing_total},
            {"lines", lines}};
}

} // namespace sqakit::sbfl
