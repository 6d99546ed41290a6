#include "sqakit/core.hpp"

#include <cctype>
#include <cstdio>

namespace sqakit {

std::string_view to_string(Task task) {
    return task == Task::FaultLocalization ? "fl" : "vd";
}

std::string_view to_string(Verdict verdict) {
    return verdict == Verdict::Vulnerable ? "vulnerable" : "non-vulnerable";
}

Task task_from_string(std::string_view s) {
    if (s == "fl") return Task::FaultLocalization;
    if (s == "vd") return Task::VulnerabilityDetection;
    throw std::invalid_argument("unknown task: " + std::string(s));
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "vulnerable") return Verdict::Vulnerable;
    if (s == "non-vulnerable") return Verdict::NonVulnerable;
    throw std::invalid_argument("unknown verdict label: " + std::string(s));
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    if (text.empty()) return lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
        if (start == text.size()) break; // trailing newline, no extra line
    }
    return lines;
}

int line_count(std::string_view text) {
    return static_cast<int>(split_lines(text).size());
}

std::string trim(std::string_view text) {
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

} // namespace sqakit
