#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sqakit/core.hpp"

namespace sqakit::parsing {

class ParseError : public std::runtime_error {
public:
    enum class Kind { NoFaultLocFound, MalformedEntry, NoVerdictFound };

    ParseError(Kind kind, const std::string& message, int entry_index = -1)
        : std::runtime_error(message), kind_(kind), entry_index_(entry_index) {}

    Kind kind() const { return kind_; }
    int entry_index() const { return entry_index_; }

private:
    Kind kind_;
    int entry_index_;
};

struct FaultLocation {
    int line = 0;
    std::string code;
    std::optional<std::string> explanation;

    bool operator==(const FaultLocation&) const = default;
};

/// Ranked fault locations recovered from a model response. Lines are unique
/// (first occurrence kept); order follows the model output.
struct FLAnswer {
    std::vector<FaultLocation> locations;
    std::string raw_text;

    std::vector<int> lines() const;

    bool operator==(const FLAnswer&) const = default;
};

struct VDAnswer {
    Verdict verdict = Verdict::NonVulnerable;
    std::optional<std::string> explanation;
    std::string raw_text;

    bool operator==(const VDAnswer&) const = default;
};

using ModelAnswer = std::variant<FLAnswer, VDAnswer>;

/// Extracts the first JSON object containing a "faultLoc" array, tolerating
/// surrounding prose and code fences. Total over arbitrary bytes: returns a
/// value or throws ParseError, never crashes.
FLAnswer parse_fl(const std::string& raw);

/// Case-insensitive verdict scan. The non-vulnerable phrase is matched first
/// (the vulnerable phrase is a substring of it); when both phrases appear,
/// the last occurrence wins. Text before the winning phrase becomes the
/// explanation when nonempty.
VDAnswer parse_vd(const std::string& raw);

/// Canonical JSON rendering of an FL answer, matching the shape the initial
/// prompt requests. parse_fl(format_fl_answer(a)) round-trips.
std::string format_fl_answer(const FLAnswer& answer);

inline constexpr const char* kVulnerablePhrase = "this code is vulnerable";
inline constexpr const char* kNonVulnerablePhrase = "this code is non-vulnerable";

} // namespace sqakit::parsing
