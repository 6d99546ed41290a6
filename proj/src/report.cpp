#include "sqakit/report.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "sqakit/evaluation.hpp"
#include "sqakit/io.hpp"

namespace sqakit::report {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json fl_metrics_json(const runner::RowOutcome& row) {
    ordered_json m;
    m["samples"] = row.samples;
    m["top1"] = row.top1;
    m["top2"] = row.top2;
    m["top3"] = row.top3;
    return m;
}

evaluation::ClassificationMetrics confusion_metrics(long tp, long fp, long tn, long fn) {
    if (tp + fp + tn + fn == 0) return {};
    return evaluation::metrics_from_confusion(tp, fp, tn, fn);
}

ordered_json vd_metrics_json(const runner::RowOutcome& row) {
    const evaluation::ClassificationMetrics metrics =
        confusion_metrics(row.tp, row.fp, row.tn, row.fn);
    ordered_json m;
    m["samples"] = row.samples;
    m["tp"] = row.tp;
    m["fp"] = row.fp;
    m["tn"] = row.tn;
    m["fn"] = row.fn;
    m["accuracy"] = metrics.accuracy;
    m["precision"] = metrics.precision;
    m["recall"] = metrics.recall;
    m["f1"] = metrics.f1;
    m["f0_5"] = metrics.f0_5;
    if (!metrics.undefined_metrics.empty()) m["undefined"] = metrics.undefined_metrics;
    return m;
}

ordered_json solved_json(Task task, const runner::RowOutcome& row) {
    ordered_json s;
    if (task == Task::FaultLocalization) {
        s["top1"] = row.solved_top1;
        s["top2"] = row.solved_top2;
        s["top3"] = row.solved_top3;
    } else {
        s["correct"] = row.correct_ids;
    }
    return s;
}

std::string pct(double ratio) {
    return format_fixed(ratio * 100.0, 1);
}

// ---------------------------------------------------------------------------
// Cross-manifest reporting

struct LoadedRow {
    std::string row_id;
    std::string source_label;
    Task task = Task::FaultLocalization;
    // FL
    long samples = 0, top1 = 0, top2 = 0, top3 = 0;
    // VD
    long tp = 0, fp = 0, tn = 0, fn = 0;
    std::set<std::string> solved; // top-1 (FL) or correct (VD)
};

struct LoadedManifests {
    Task task = Task::FaultLocalization;
    std::string corpus_hash;
    std::vector<LoadedRow> rows;
};

LoadedManifests load_manifests(const std::vector<std::filesystem::path>& paths) {
    if (paths.empty()) {
        throw ReportError(ReportError::Kind::Malformed, "no manifests given");
    }
    LoadedManifests out;
    std::set<std::string> seen_rows;
    bool first = true;
    for (const std::filesystem::path& path : paths) {
        json manifest;
        try {
            manifest = json::parse(io::read_file(path));
        } catch (const std::exception& e) {
            throw ReportError(ReportError::Kind::Malformed,
                              path.string() + ": " + std::string(e.what()));
        }
        Task task;
        std::string corpus_hash;
        std::string label;
        try {
            task = task_from_string(manifest.at("config").at("task").get<std::string>());
            corpus_hash = manifest.at("corpus").at("hash").get<std::string>();
            label = manifest.at("config").value("label", "run");
        } catch (const std::exception& e) {
            throw ReportError(ReportError::Kind::Malformed,
                              path.string() + ": not a run manifest (" + e.what() + ")");
        }
        if (first) {
            out.task = task;
            out.corpus_hash = corpus_hash;
            first = false;
        } else if (task != out.task || corpus_hash != out.corpus_hash) {
            throw ReportError(ReportError::Kind::CorpusMismatch,
                              path.string() + ": task or corpus hash differs from earlier manifests");
        }
        for (const json& rj : manifest.at("rows")) {
            LoadedRow row;
            row.row_id = rj.at("row").get<std::string>();
            row.source_label = label;
            row.task = task;
            if (!seen_rows.insert(row.row_id).second) {
                throw ReportError(ReportError::Kind::DuplicateRow,
                                  "row '" + row.row_id + "' appears in more than one manifest");
            }
            const json& m = rj.at("metrics");
            row.samples = m.at("samples").get<long>();
            if (task == Task::FaultLocalization) {
                row.top1 = m.at("top1").get<long>();
                row.top2 = m.at("top2").get<long>();
                row.top3 = m.at("top3").get<long>();
                for (const json& id : rj.at("solved").at("top1")) {
                    row.solved.insert(id.get<std::string>());
                }
            } else {
                row.tp = m.at("tp").get<long>();
                row.fp = m.at("fp").get<long>();
                row.tn = m.at("tn").get<long>();
                row.fn = m.at("fn").get<long>();
                for (const json& id : rj.at("solved").at("correct")) {
                    row.solved.insert(id.get<std::string>());
                }
            }
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

ordered_json intersection_json(const evaluation::IntersectionTable& table, long min_count) {
    // Sorted by count descending, then subset for determinism.
    std::vector<std::pair<std::vector<std::string>, long>> entries(table.counts.begin(),
                                                                   table.counts.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    ordered_json out = ordered_json::array();
    for (const auto& [models, count] : entries) {
        if (count < min_count) continue;
        out.push_back({{"models", models}, {"count", count}});
    }
    return out;
}

} // namespace

ordered_json rows_json(Task task, const std::vector<runner::RowOutcome>& rows, bool with_solved) {
    ordered_json out = ordered_json::array();
    for (const runner::RowOutcome& row : rows) {
        ordered_json rj;
        rj["row"] = row.row_id;
        rj["metrics"] =
            task == Task::FaultLocalization ? fl_metrics_json(row) : vd_metrics_json(row);
        if (with_solved) rj["solved"] = solved_json(task, row);
        out.push_back(std::move(rj));
    }
    return out;
}

std::string render_markdown(Task task, const std::string& label,
                            const std::vector<runner::RowOutcome>& rows) {
    std::string md = "# Run report: " + label + "\n\n";
    if (task == Task::FaultLocalization) {
        md += "| Technique | Top-1 | Top-2 | Top-3 |\n";
        md += "|---|---|---|---|\n";
        for (const runner::RowOutcome& row : rows) {
            md += "| " + row.row_id + " | " + std::to_string(row.top1) + " | " +
                  std::to_string(row.top2) + " | " + std::to_string(row.top3) + " |\n";
        }
    } else {
        md += "| Technique | Acc | Prec | Rec | F1 | F0.5 |\n";
        md += "|---|---|---|---|---|---|\n";
        for (const runner::RowOutcome& row : rows) {
            const evaluation::ClassificationMetrics m =
                confusion_metrics(row.tp, row.fp, row.tn, row.fn);
            md += "| " + row.row_id + " | " + pct(m.accuracy) + " | " + pct(m.precision) + " | " +
                  pct(m.recall) + " | " + pct(m.f1) + " | " + pct(m.f0_5) + " |\n";
        }
    }
    return md;
}

RenderedReport build_report(const std::vector<std::filesystem::path>& manifest_paths,
                            const ReportOptions& options) {
    const LoadedManifests loaded = load_manifests(manifest_paths);

    const LoadedRow* baseline = nullptr;
    for (const LoadedRow& row : loaded.rows) {
        if (row.row_id == options.baseline_id) baseline = &row;
    }
    if (baseline == nullptr) {
        throw ReportError(ReportError::Kind::UnknownBaseline,
                          "baseline row '" + options.baseline_id + "' not found in any manifest");
    }

    const evaluation::ClassificationMetrics baseline_vd =
        loaded.task == Task::VulnerabilityDetection
            ? confusion_metrics(baseline->tp, baseline->fp, baseline->tn, baseline->fn)
            : evaluation::ClassificationMetrics{};

    ordered_json report;
    report["task"] = std::string(to_string(loaded.task));
    report["baseline"] = options.baseline_id;
    report["corpus_hash"] = loaded.corpus_hash;

    std::string md = "# Comparison report\n\nBaseline: " + options.baseline_id + "\n\n";
    if (loaded.task == Task::FaultLocalization) {
        md += "| Technique | Top-1 | Top-2 | Top-3 | Δ " + options.baseline_id + " |\n";
        md += "|---|---|---|---|---|\n";
    } else {
        md += "| Technique | Acc | Prec | Rec | F1 | F0.5 | Δ " + options.baseline_id + " |\n";
        md += "|---|---|---|---|---|---|---|\n";
    }

    ordered_json rows = ordered_json::array();
    std::map<std::string, std::set<std::string>> success_sets;
    for (const LoadedRow& row : loaded.rows) {
        ordered_json rj;
        rj["row"] = row.row_id;
        ordered_json deltas = ordered_json::object();
        std::string delta_display = "-";
        if (loaded.task == Task::FaultLocalization) {
            rj["metrics"] = {{"samples", row.samples},
                             {"top1", row.top1},
                             {"top2", row.top2},
                             {"top3", row.top3}};
            auto add_delta = [&](const char* name, long value, long base) {
                if (base == 0) return;
                deltas[name] = evaluation::round_percent(evaluation::relative_delta(
                    static_cast<double>(value), static_cast<double>(base)));
            };
            add_delta("top1", row.top1, baseline->top1);
            add_delta("top2", row.top2, baseline->top2);
            add_delta("top3", row.top3, baseline->top3);
            if (&row != baseline && baseline->top1 != 0) {
                delta_display = evaluation::format_percent(
                    evaluation::relative_delta(static_cast<double>(row.top1),
                                               static_cast<double>(baseline->top1)),
                    /*with_sign=*/true);
            }
            md += "| " + row.row_id + " | " + std::to_string(row.top1) + " | " +
                  std::to_string(row.top2) + " | " + std::to_string(row.top3) + " | " +
                  delta_display + " |\n";
        } else {
            const evaluation::ClassificationMetrics m =
                confusion_metrics(row.tp, row.fp, row.tn, row.fn);
            rj["metrics"] = {{"samples", row.samples}, {"tp", row.tp},     {"fp", row.fp},
                             {"tn", row.tn},           {"fn", row.fn},     {"accuracy", m.accuracy},
                             {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                             {"f0_5", m.f0_5}};
            auto add_delta = [&](const char* name, double value, double base) {
                if (base == 0.0) return;
                deltas[name] = evaluation::round_percent(evaluation::relative_delta(value, base));
            };
            add_delta("accuracy", m.accuracy, baseline_vd.accuracy);
            add_delta("precision", m.precision, baseline_vd.precision);
            add_delta("recall", m.recall, baseline_vd.recall);
            add_delta("f1", m.f1, baseline_vd.f1);
            add_delta("f0_5", m.f0_5, baseline_vd.f0_5);
            if (&row != baseline && baseline_vd.accuracy != 0.0) {
                delta_display = evaluation::format_percent(
                    evaluation::relative_delta(m.accuracy, baseline_vd.accuracy),
                    /*with_sign=*/true);
            }
            md += "| " + row.row_id + " | " + pct(m.accuracy) + " | " + pct(m.precision) + " | " +
                  pct(m.recall) + " | " + pct(m.f1) + " | " + pct(m.f0_5) + " | " + delta_display +
                  " |\n";
        }
        rj["delta"] = std::move(deltas);
        rows.push_back(std::move(rj));
        success_sets[row.row_id] = row.solved;
    }
    report["rows"] = std::move(rows);

    if (success_sets.size() >= 2) {
        const evaluation::IntersectionTable table = evaluation::intersection_table(success_sets);
        report["intersection"] = intersection_json(table, options.min_intersection);
        md += "\n## Solved-sample intersections";
        md += loaded.task == Task::FaultLocalization ? " (Top-1)\n\n" : " (correct predictions)\n\n";
        md += "| Techniques | Count |\n|---|---|\n";
        for (const auto& entry : report["intersection"]) {
            std::string names;
            for (const auto& model : entry["models"]) {
                if (!names.empty()) names += " + ";
                names += model.get<std::string>();
            }
            md += "| " + names + " | " + std::to_string(entry["count"].get<long>()) + " |\n";
        }
    }

    return RenderedReport{std::move(report), std::move(md)};
}

} // namespace sqakit::report
