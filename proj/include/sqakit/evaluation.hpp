#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sqakit/core.hpp"

namespace sqakit::evaluation {

class EvalError : public std::runtime_error {
public:
    enum class Kind { LengthMismatch, Empty, ZeroBaseline };

    EvalError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Best-case Top-K: true iff any of the first min(k, len) predicted lines is
/// a ground-truth fault line.
bool topk_success(std::span<const int> final_lines, const std::set<int>& ground_truth, int k);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double f0_5 = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    // Ratios with a zero denominator are reported as 0 and flagged here.
    std::vector<std::string> undefined_metrics;
};

/// Vulnerable is the positive class.
ClassificationMetrics classification_metrics(std::span<const Verdict> preds,
                                             std::span<const Verdict> labels);

ClassificationMetrics metrics_from_confusion(long tp, long fp, long tn, long fn);

/// Signed percent change relative to a baseline: 100 * (value - baseline) / baseline.
double relative_delta(double value, double baseline);

/// Two-decimal percent display rule anchored to reference result tables: positive
/// values round half away from zero, negative values truncate toward zero.
double round_percent(double percent);

std::string format_percent(double percent, bool with_sign);

struct IntersectionTable {
    // model-id subset (sorted) -> samples solved by exactly that subset
    std::map<std::vector<std::string>, long> counts;

    long total() const;
};

/// Partition of the solved-sample union by the exact subset of models that
/// solved each sample. Display filtering (minimum count) is a report option,
/// not part of this computation.
IntersectionTable intersection_table(const std::map<std::string, std::set<std::string>>& success);

/// Drops predicted lines outside [1, line_count]; dropped lines are appended
/// to `dropped` when provided. Out-of-range predictions never count as hits.
std::vector<int> filter_lines_in_range(std::span<const int> lines, int line_count,
                                       std::vector<int>* dropped = nullptr);

} // namespace sqakit::evaluation
