#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sqakit {

enum class Task { FaultLocalization, VulnerabilityDetection };

enum class Verdict { Vulnerable, NonVulnerable };

std::string_view to_string(Task task);
std::string_view to_string(Verdict verdict);
Task task_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);

/// Splits source text into lines. Line numbers are 1-based; a trailing
/// newline does not produce an extra empty line. Empty input has 0 lines.
std::vector<std::string> split_lines(std::string_view text);

int line_count(std::string_view text);

std::string trim(std::string_view text);

/// Fixed-point formatting helpers (std::format is unavailable on the
/// supported toolchain baseline).
std::string format_fixed(double value, int decimals);

} // namespace sqakit
