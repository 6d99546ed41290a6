#include "sqakit/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace sqakit::evaluation {

bool topk_success(std::span<const int> final_lines, const std::set<int>& ground_truth, int k) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                                                   final_lines.size());
    for (std::size_t i = 0; i < take; ++i) {
        if (ground_truth.count(final_lines[i]) > 0) return true;
    }
    return false;
}

ClassificationMetrics metrics_from_confusion(long tp, long fp, long tn, long fn) {
    ClassificationMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const long total = tp + fp + tn + fn;
    if (total == 0) throw EvalError(EvalError::Kind::Empty, "empty prediction set");

    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    if (tp + fp > 0) {
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    } else {
        m.undefined_metrics.push_back("precision");
    }
    if (tp + fn > 0) {
        m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    } else {
        m.undefined_metrics.push_back("recall");
    }
    if (m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
        m.undefined_metrics.push_back("f1");
    }
    const double f05_denom = 0.25 * m.precision + m.recall;
    if (f05_denom > 0.0) {
        m.f0_5 = 1.25 * m.precision * m.recall / f05_denom;
    } else {
        m.undefined_metrics.push_back("f0_5");
    }
    return m;
}

ClassificationMetrics classification_metrics(std::span<const Verdict> preds,
                                             std::span<const Verdict> labels) {
    if (preds.size() != labels.size()) {
        throw EvalError(EvalError::Kind::LengthMismatch,
                        "preds/labels size mismatch: " + std::to_string(preds.size()) + " vs " +
                            std::to_string(labels.size()));
    }
    if (preds.empty()) throw EvalError(EvalError::Kind::Empty, "empty prediction set");

    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool predicted = preds[i] == Verdict::Vulnerable;
        const bool actual = labels[i] == Verdict::Vulnerable;
        if (predicted && actual) ++tp;
        else if (predicted && !actual) ++fp;
        else if (!predicted && actual) ++fn;
        else ++tn;
    }
    return metrics_from_confusion(tp, fp, tn, fn);
}

double relative_delta(double value, double baseline) {
    if (baseline == 0.0) {
        throw EvalError(EvalError::Kind::ZeroBaseline, "relative delta against a zero baseline");
    }
    return 100.0 * (value - baseline) / baseline;
}

double round_percent(double percent) {
    const double scaled = percent * 100.0;
    // Reference deltas round improvements to nearest but truncate declines
    // toward zero; both behaviors are pinned by the frozen acceptance values.
    const double rounded = percent >= 0.0 ? std::floor(scaled + 0.5) : std::ceil(scaled);
    return rounded / 100.0;
}

std::string format_percent(double percent, bool with_sign) {
    const double rounded = round_percent(percent);
    std::string out = format_fixed(std::abs(rounded), 2) + "%";
    if (rounded < 0.0) return "-" + out;
    if (with_sign && rounded > 0.0) return "+" + out;
    return out;
}

long IntersectionTable::total() const {
    long sum = 0;
    for (const auto& [_, count] : counts) sum += count;
    return sum;
}

IntersectionTable intersection_table(const std::map<std::string, std::set<std::string>>& success) {
    std::set<std::string> universe;
    for (const auto& [_, solved] : success) universe.insert(solved.begin(), solved.end());

    IntersectionTable table;
    for (const std::string& sample : universe) {
        std::vector<std::string> solvers;
        for (const auto& [model, solved] : success) {
            if (solved.count(sample) > 0) solvers.push_back(model);
        }
        ++table.counts[solvers]; // solvers is sorted: map iteration order
    }
    return table;
}

std::vector<int> filter_lines_in_range(std::span<const int> lines, int line_count,
                                       std::vector<int>* dropped) {
    std::vector<int> kept;
    kept.reserve(lines.size());
    for (int line : lines) {
        if (line >= 1 && line <= line_count) {
            kept.push_back(line);
        } else if (dropped != nullptr) {
            dropped->push_back(line);
        }
    }
    return kept;
}

} // namespace sqakit::evaluation
