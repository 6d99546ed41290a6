#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sqakit/config.hpp"
#include "sqakit/dataset.hpp"
#include "sqakit/gateway.hpp"
#include "sqakit/io.hpp"
#include "sqakit/prompting.hpp"
#include "sqakit/report.hpp"
#include "sqakit/retrieval.hpp"
#include "sqakit/runner.hpp"
#include "sqakit/sbfl.hpp"

namespace {

using namespace sqakit;

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string item =
            trim(csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

struct RunFlags {
    std::string config_path;
    std::string task;
    std::string mode;
    std::string models_csv;
    std::string priority_csv;
    std::string pairs_csv;
    bool cot = false;
    bool no_cot = false;
    std::optional<uint64_t> seed;
    std::string cache;
    std::string corpus;
    std::string cache_dir;
    std::string out_dir;
    std::optional<int> parallelism;
    std::string label;
};

config::RunConfig merge_flags(const RunFlags& flags) {
    config::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = config::load_config_file(flags.config_path);
    if (!flags.task.empty()) cfg.task = task_from_string(flags.task);
    if (!flags.mode.empty()) cfg.mode = config::mode_from_string(flags.mode);
    if (!flags.corpus.empty()) cfg.corpus = flags.corpus;
    if (!flags.models_csv.empty()) {
        // Select a subset of the configured roster.
        const std::vector<std::string> wanted = split_csv(flags.models_csv);
        std::vector<gateway::ModelConfig> selected;
        for (const std::string& id : wanted) {
            const auto it = std::find_if(cfg.models.begin(), cfg.models.end(),
                                         [&](const auto& m) { return m.model_id == id; });
            if (it == cfg.models.end()) {
                throw config::ConfigError("--models names unknown model: " + id);
            }
            selected.push_back(*it);
        }
        cfg.models = std::move(selected);
        cfg.priority.clear(); // re-derive from ranks unless --priority is given
    }
    if (!flags.priority_csv.empty()) cfg.priority = split_csv(flags.priority_csv);
    if (!flags.pairs_csv.empty()) {
        cfg.pairs.clear();
        for (const std::string& pair : split_csv(flags.pairs_csv)) {
            const std::size_t sep = pair.find("<=");
            if (sep == std::string::npos) {
                throw config::ConfigError("--pairs expects LEFT<=RIGHT entries, got: " + pair);
            }
            cfg.pairs.push_back(
                config::CrossValPair{trim(pair.substr(0, sep)), trim(pair.substr(sep + 2))});
        }
    }
    if (flags.cot) cfg.cot = true;
    if (flags.no_cot) cfg.cot = false;
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.cache.empty()) cfg.cache_mode = gateway::cache_mode_from_string(flags.cache);
    if (!flags.cache_dir.empty()) cfg.cache_dir = flags.cache_dir;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.parallelism) cfg.parallelism = *flags.parallelism;
    if (!flags.label.empty()) cfg.label = flags.label;
    return cfg;
}

int cmd_run(const RunFlags& flags) {
    const config::RunConfig cfg = merge_flags(flags);
    const runner::RunResult result = runner::run(cfg);
    std::cout << "samples: " << result.sample_count << "\n";
    std::cout << "errors: " << result.error_count << "\n";
    std::cout << "manifest: " << result.manifest_path.string() << "\n";
    std::cout << "results: " << result.results_path.string() << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& manifests, const std::string& baseline,
               const std::string& out_dir, long min_intersection) {
    report::ReportOptions options;
    options.baseline_id = baseline;
    options.min_intersection = min_intersection;
    std::vector<std::filesystem::path> paths(manifests.begin(), manifests.end());
    const report::RenderedReport rendered = report::build_report(paths, options);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        io::write_file(std::filesystem::path(out_dir) / "report.json", rendered.json.dump(2) + "\n");
        io::write_file(std::filesystem::path(out_dir) / "report.md", rendered.markdown);
    }
    std::cout << rendered.markdown;
    return 0;
}

int cmd_cache_stats(const std::string& cache_dir) {
    gateway::ResponseCache cache{cache_dir};
    nlohmann::ordered_json out;
    out["dir"] = cache_dir;
    out["entries"] = cache.entry_count();
    out["per_model"] = cache.entries_per_model();
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_validate_corpus(const std::string& corpus_dir) {
    const std::filesystem::path dir(corpus_dir);
    const nlohmann::json manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
    const Task task = task_from_string(manifest.at("task").get<std::string>());
    if (task == Task::FaultLocalization) {
        const dataset::FLCorpus corpus = dataset::load_fl_corpus(dir);
        long fault_lines = 0;
        for (const auto& s : corpus.samples) {
            fault_lines += static_cast<long>(s.ground_truth_lines.size());
        }
        std::cout << "task: fl\nsamples: " << corpus.samples.size()
                  << "\nfault lines: " << fault_lines
                  << "\nhash: " << dataset::corpus_content_hash(dir) << "\n";
    } else {
        const dataset::VDCorpus corpus = dataset::load_vd_corpus(dir);
        long vulnerable = 0;
        for (const auto& s : corpus.test) {
            if (s.label == Verdict::Vulnerable) ++vulnerable;
        }
        std::cout << "task: vd\nsamples: " << corpus.test.size() << "\nvulnerable: " << vulnerable
                  << "\nnon-vulnerable: " << (static_cast<long>(corpus.test.size()) - vulnerable)
                  << "\npool: " << corpus.pool.examples.size()
                  << "\nembedding dim: " << corpus.pool.embedding_dim
                  << "\nhash: " << dataset::corpus_content_hash(dir) << "\n";
    }
    std::cout << "ok\n";
    return 0;
}

struct RenderFlags {
    std::string corpus;
    std::string sample_id;
    bool cot = false;
    uint64_t seed = 0;
    int top_hints = 5;
    bool validation = false;
    std::string own_answer_file;
    std::string other_answer_file;
};

int cmd_render_prompt(const RenderFlags& flags) {
    const std::filesystem::path dir(flags.corpus);
    const nlohmann::json manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
    const Task task = task_from_string(manifest.at("task").get<std::string>());

    prompting::PromptBundle bundle;
    if (task == Task::FaultLocalization) {
        const dataset::FLCorpus corpus = dataset::load_fl_corpus(dir);
        const auto it = std::find_if(corpus.samples.begin(), corpus.samples.end(),
                                     [&](const auto& s) { return s.id == flags.sample_id; });
        if (it == corpus.samples.end()) {
            throw std::runtime_error("no sample with id " + flags.sample_id);
        }
        sbfl::SuspiciousnessRanking ranking;
        if (it->sbfl_hints && !it->sbfl_hints->empty()) {
            ranking.technique_name = it->sbfl_hints->front().technique;
            for (const auto& h : *it->sbfl_hints) {
                ranking.entries.push_back(sbfl::RankedLine{h.line, h.code, h.score});
            }
        } else {
            ranking = sbfl::rank_lines(*it->spectrum, it->source_code);
        }
        bundle = prompting::build_fl_initial(*it, sbfl::top_n_hints(ranking, flags.top_hints));
    } else {
        const dataset::VDCorpus corpus = dataset::load_vd_corpus(dir);
        const auto it = std::find_if(corpus.test.begin(), corpus.test.end(),
                                     [&](const auto& s) { return s.id == flags.sample_id; });
        if (it == corpus.test.end()) {
            throw std::runtime_error("no sample with id " + flags.sample_id);
        }
        retrieval::ExampleSelection selection;
        selection.random_examples = retrieval::select_random_examples(
            corpus.pool, 3, retrieval::derive_seed(flags.seed, it->id), it->id);
        std::vector<double> query;
        if (it->embedding) {
            query = *it->embedding;
        } else {
            query = retrieval::IdentityEmbeddingProvider(corpus.pool.embedding_dim)
                        .embed(it->source_code);
        }
        selection.similar_examples =
            retrieval::select_similar_examples(corpus.pool, query, 3, it->id);
        bundle = prompting::build_vd_initial(*it, selection, flags.cot);
    }

    if (flags.validation) {
        const std::string own = io::read_file(flags.own_answer_file);
        const std::string other = io::read_file(flags.other_answer_file);
        bundle = prompting::build_validation(task, bundle, own, other, prompting::ensure_for(task));
        for (const prompting::Message& m : bundle.messages) {
            std::cout << "=== " << prompting::to_string(m.role) << " ===\n" << m.text << "\n";
        }
        return 0;
    }
    // Exact template bytes plus one trailing newline.
    std::cout << bundle.messages.front().text << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-model ensemble pipeline for fault localization and vulnerability detection"};
    app.require_subcommand(1);

    RunFlags run_flags;
    CLI::App* run = app.add_subcommand("run", "Execute an experiment from a config file");
    run->add_option("--config", run_flags.config_path, "Declarative run config file");
    run->add_option("--task", run_flags.task, "Task: fl or vd");
    run->add_option("--mode", run_flags.mode, "Mode: single, vote or crossval");
    run->add_option("--models", run_flags.models_csv, "Comma-separated roster subset");
    run->add_option("--priority", run_flags.priority_csv, "Comma-separated priority order");
    run->add_option("--pairs", run_flags.pairs_csv, "Crossval pairs, e.g. A<=B,C<=D");
    run->add_flag("--cot", run_flags.cot, "Request step-by-step explanations (vd)");
    run->add_flag("--no-cot", run_flags.no_cot, "Disable explanations");
    run->add_option("--seed", run_flags.seed, "Run seed");
    run->add_option("--cache", run_flags.cache, "Cache mode: record, replay or bypass");
    run->add_option("--corpus", run_flags.corpus, "Corpus directory");
    run->add_option("--cache-dir", run_flags.cache_dir, "Response cache directory");
    run->add_option("--out", run_flags.out_dir, "Output directory");
    run->add_option("--parallelism", run_flags.parallelism, "Concurrent requests bound");
    run->add_option("--label", run_flags.label, "Run label used in reports");

    std::vector<std::string> report_manifests;
    std::string report_baseline;
    std::string report_out;
    long report_min_intersection = 0;
    CLI::App* report_cmd = app.add_subcommand("report", "Compare runs against a baseline row");
    report_cmd->add_option("manifests", report_manifests, "Run manifest.json paths")->required();
    report_cmd->add_option("--baseline", report_baseline, "Baseline row id")->required();
    report_cmd->add_option("--out", report_out, "Directory for report.json / report.md");
    report_cmd->add_option("--min-intersection", report_min_intersection,
                           "Hide intersection sets below this count");

    std::string cache_dir = "cache";
    CLI::App* cache_cmd = app.add_subcommand("cache", "Response cache utilities");
    cache_cmd->require_subcommand(1);
    CLI::App* cache_stats = cache_cmd->add_subcommand("stats", "Print cache statistics");
    cache_stats->add_option("--cache-dir", cache_dir, "Response cache directory");

    std::string validate_corpus_dir;
    CLI::App* validate_cmd = app.add_subcommand("validate-corpus", "Check a corpus directory");
    validate_cmd->add_option("--corpus", validate_corpus_dir, "Corpus directory")->required();

    RenderFlags render_flags;
    CLI::App* render = app.add_subcommand("render-prompt", "Print a built prompt for inspection");
    render->add_option("--corpus", render_flags.corpus, "Corpus directory")->required();
    render->add_option("--sample", render_flags.sample_id, "Sample id")->required();
    render->add_flag("--cot", render_flags.cot, "Request step-by-step explanations (vd)");
    render->add_option("--seed", render_flags.seed, "Run seed for example selection");
    render->add_option("--top-hints", render_flags.top_hints, "SBFL hint count (fl)");
    render->add_flag("--validation", render_flags.validation, "Render a validation bundle");
    render->add_option("--own-answer", render_flags.own_answer_file,
                       "File with this model's previous answer (validation)");
    render->add_option("--other-answer", render_flags.other_answer_file,
                       "File with the other model's answer (validation)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (report_cmd->parsed()) {
            return cmd_report(report_manifests, report_baseline, report_out,
                              report_min_intersection);
        }
        if (cache_cmd->parsed()) return cmd_cache_stats(cache_dir);
        if (validate_cmd->parsed()) return cmd_validate_corpus(validate_corpus_dir);
        if (render->parsed()) return cmd_render_prompt(render_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
