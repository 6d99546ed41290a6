#include "sqakit/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

namespace sqakit::parsing {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::vector<int> FLAnswer::lines() const {
    std::vector<int> out;
    out.reserve(locations.size());
    for (const FaultLocation& loc : locations) out.push_back(loc.line);
    return out;
}

namespace {

/// Finds the end (one past '}') of a balanced JSON-ish object starting at
/// `start` (which must index a '{'), honoring string literals and escapes.
/// Returns npos when unbalanced.
std::size_t balanced_object_end(const std::string& text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) return i + 1;
            if (depth < 0) return std::string::npos;
        }
    }
    return std::string::npos;
}

std::optional<int> coerce_line_number(const json& value) {
    if (value.is_number_integer()) return value.get<int>();
    if (value.is_number_float()) {
        const double d = value.get<double>();
        if (d == std::floor(d)) return static_cast<int>(d);
        return std::nullopt;
    }
    if (value.is_string()) {
        const std::string s = trim(value.get<std::string>());
        if (s.empty()) return std::nullopt;
        std::size_t pos = 0;
        try {
            const int n = std::stoi(s, &pos);
            if (pos == s.size()) return n;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

std::vector<FaultLocation> locations_from_array(const json& arr) {
    std::vector<FaultLocation> locations;
    std::set<int> seen;
    int index = -1;
    for (const json& entry : arr) {
        ++index;
        if (!entry.is_object()) {
            throw ParseError(ParseError::Kind::MalformedEntry,
                             "faultLoc entry " + std::to_string(index) + " is not an object", index);
        }
        const auto it = entry.find("faultyLine");
        if (it == entry.end()) {
            throw ParseError(ParseError::Kind::MalformedEntry,
                             "faultLoc entry " + std::to_string(index) + " has no faultyLine", index);
        }
        const std::optional<int> line = coerce_line_number(*it);
        if (!line || *line < 1) {
            throw ParseError(ParseError::Kind::MalformedEntry,
                             "faultLoc entry " + std::to_string(index) +
                                 " has a non-positive or non-numeric faultyLine",
                             index);
        }
        if (!seen.insert(*line).second) continue; // duplicate line, first occurrence wins

        FaultLocation loc;
        loc.line = *line;
        if (entry.contains("code") && entry["code"].is_string()) {
            loc.code = entry["code"].get<std::string>();
        }
        if (entry.contains("explanation") && entry["explanation"].is_string()) {
            loc.explanation = entry["explanation"].get<std::string>();
        }
        locations.push_back(std::move(loc));
    }
    return locations;
}

std::string ascii_lower(const std::string& text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::size_t> find_all(const std::string& haystack, const std::string& needle) {
    std::vector<std::size_t> positions;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string::npos) {
        positions.push_back(pos);
        pos = haystack.find(needle, pos + 1);
    }
    return positions;
}

} // namespace

FLAnswer parse_fl(const std::string& raw) {
    const std::string key = "\"faultLoc\"";
    for (std::size_t i = raw.find('{'); i != std::string::npos; i = raw.find('{', i + 1)) {
        const std::size_t end = balanced_object_end(raw, i);
        if (end == std::string::npos) continue;
        const std::string candidate = raw.substr(i, end - i);
        if (candidate.find(key) == std::string::npos) continue;
        const json parsed = json::parse(candidate, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.is_object()) continue;
        const auto it = parsed.find("faultLoc");
        if (it == parsed.end() || !it->is_array()) continue;

        FLAnswer answer;
        answer.locations = locations_from_array(*it);
        answer.raw_text = raw;
        return answer;
    }
    throw ParseError(ParseError::Kind::NoFaultLocFound, "no faultLoc object found in response");
}

VDAnswer parse_vd(const std::string& raw) {
    const std::string lower = ascii_lower(raw);
    const std::string non_vulnerable = kNonVulnerablePhrase;
    const std::string vulnerable = kVulnerablePhrase;

    struct Match {
        std::size_t pos;
        Verdict verdict;
    };
    std::vector<Match> matches;
    std::vector<std::pair<std::size_t, std::size_t>> nv_spans;
    for (std::size_t pos : find_all(lower, non_vulnerable)) {
        matches.push_back({pos, Verdict::NonVulnerable});
        nv_spans.emplace_back(pos, pos + non_vulnerable.size());
    }
    for (std::size_t pos : find_all(lower, vulnerable)) {
        // Longest pattern first: skip matches that overlap a non-vulnerable
        // phrase occurrence.
        const std::size_t end = pos + vulnerable.size();
        const bool overlaps =
            std::any_of(nv_spans.begin(), nv_spans.end(), [pos, end](const auto& span) {
                return pos < span.second && span.first < end;
            });
        if (!overlaps) matches.push_back({pos, Verdict::Vulnerable});
    }
    if (matches.empty()) {
        throw ParseError(ParseError::Kind::NoVerdictFound, "no verdict phrase found in response");
    }

    const Match winner = *std::max_element(
        matches.begin(), matches.end(), [](const Match& a, const Match& b) { return a.pos < b.pos; });

    VDAnswer answer;
    answer.verdict = winner.verdict;
    answer.raw_text = raw;
    const std::string before = trim(std::string_view(raw).substr(0, winner.pos));
    if (!before.empty()) answer.explanation = before;
    return answer;
}

std::string format_fl_answer(const FLAnswer& answer) {
    ordered_json arr = ordered_json::array();
    for (const FaultLocation& loc : answer.locations) {
        ordered_json entry;
        entry["faultyLine"] = loc.line;
        entry["code"] = loc.code;
        if (loc.explanation) entry["explanation"] = *loc.explanation;
        arr.push_back(std::move(entry));
    }
    ordered_json root;
    root["faultLoc"] = std::move(arr);
    return root.dump();
}

} // namespace sqakit::parsing
