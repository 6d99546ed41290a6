#include "sqakit/runner.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "sqakit/dataset.hpp"
#include "sqakit/ensemble.hpp"
#include "sqakit/evaluation.hpp"
#include "sqakit/gateway.hpp"
#include "sqakit/io.hpp"
#include "sqakit/parsing.hpp"
#include "sqakit/prompting.hpp"
#include "sqakit/report.hpp"
#include "sqakit/retrieval.hpp"

namespace sqakit::runner {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct ModelState {
    const gateway::ModelConfig* cfg = nullptr;
    std::string fingerprint;
    std::optional<std::string> response_text;
    std::optional<std::string> gateway_error;
    std::optional<parsing::FLAnswer> fl_answer; // locations already range-filtered
    std::optional<parsing::VDAnswer> vd_answer;
    std::optional<std::string> parse_error;
    std::vector<int> dropped_lines;
};

RowOutcome& row_for(std::vector<RowOutcome>& rows, const std::string& id) {
    for (RowOutcome& row : rows) {
        if (row.row_id == id) return row;
    }
    rows.push_back(RowOutcome{});
    rows.back().row_id = id;
    return rows.back();
}

void score_fl_row(RowOutcome& row, const std::string& sample_id, const std::vector<int>& lines,
                  const std::set<int>& truth) {
    ++row.samples;
    if (evaluation::topk_success(lines, truth, 1)) { ++row.top1; row.solved_top1.insert(sample_id); }
    if (evaluation::topk_success(lines, truth, 2)) { ++row.top2; row.solved_top2.insert(sample_id); }
    if (evaluation::topk_success(lines, truth, 3)) { ++row.top3; row.solved_top3.insert(sample_id); }
}

/// Unparseable or failed responses count as incorrect: the prediction is
/// booked as the wrong class so precision/recall stay well-defined.
void score_vd_row(RowOutcome& row, const std::string& sample_id,
                  const std::optional<Verdict>& predicted, Verdict label) {
    ++row.samples;
    const Verdict effective = predicted.value_or(
        label == Verdict::Vulnerable ? Verdict::NonVulnerable : Verdict::Vulnerable);
    const bool actual_positive = label == Verdict::Vulnerable;
    const bool predicted_positive = effective == Verdict::Vulnerable;
    if (predicted_positive && actual_positive) ++row.tp;
    else if (predicted_positive && !actual_positive) ++row.fp;
    else if (!predicted_positive && actual_positive) ++row.fn;
    else ++row.tn;
    if (predicted && *predicted == label) row.correct_ids.insert(sample_id);
}

ordered_json fl_lines_json(const std::vector<int>& lines) {
    ordered_json arr = ordered_json::array();
    for (int line : lines) arr.push_back(line);
    return arr;
}

ordered_json model_record(const ModelState& state, Task task) {
    ordered_json j;
    j["model_id"] = state.cfg->model_id;
    j["fingerprint"] = state.fingerprint;
    if (state.gateway_error) {
        j["status"] = "gateway_error";
        j["error"] = *state.gateway_error;
        return j;
    }
    if (state.parse_error) {
        j["status"] = "parse_error";
        j["error"] = *state.parse_error;
        return j;
    }
    j["status"] = "ok";
    if (task == Task::FaultLocalization) {
        j["lines"] = fl_lines_json(state.fl_answer->lines());
        if (!state.dropped_lines.empty()) j["dropped_lines"] = fl_lines_json(state.dropped_lines);
    } else {
        j["verdict"] = std::string(to_string(state.vd_answer->verdict));
    }
    return j;
}

ordered_json tally_json(const ensemble::EnsembleVerdict& verdict) {
    ordered_json tallies = ordered_json::array();
    for (const ensemble::RankTally& tally : verdict.tally) {
        ordered_json votes = ordered_json::object();
        for (const auto& [candidate, models] : tally.votes) votes[candidate] = models;
        tallies.push_back({{"rank", tally.rank}, {"votes", std::move(votes)}});
    }
    return tallies;
}

ordered_json tiebreaks_json(const ensemble::EnsembleVerdict& verdict) {
    ordered_json out = ordered_json::array();
    for (const ensemble::Tiebreak& tb : verdict.tiebreaks_fired) {
        out.push_back({{"rank", tb.rank}, {"chosen_by", tb.chosen_by}});
    }
    return out;
}

struct SampleInput {
    std::string id;
    Task task;
    // FL
    const dataset::FLSample* fl = nullptr;
    // VD
    const dataset::VDSample* vd = nullptr;
};

class Runner {
public:
    explicit Runner(const config::RunConfig& cfg)
        : cfg_(cfg), gw_(cfg.cache_dir), priority_(config::resolved_priority(cfg)) {}

    RunResult execute();

private:
    void run_sample(const SampleInput& sample);
    prompting::PromptBundle build_initial(const SampleInput& sample);
    std::vector<ModelState> dispatch(const prompting::PromptBundle& bundle,
                                     const std::vector<const gateway::ModelConfig*>& roster,
                                     const SampleInput& sample);
    void parse_state(ModelState& state, const SampleInput& sample);
    void score_single(const SampleInput& sample, const std::vector<ModelState>& states,
                      ordered_json& record);
    void score_vote(const SampleInput& sample, const std::vector<ModelState>& states,
                    ordered_json& record);
    void score_crossval(const SampleInput& sample, const prompting::PromptBundle& bundle,
                        const std::vector<ModelState>& states, ordered_json& record);
    std::vector<const gateway::ModelConfig*> roster() const;
    const ModelState* state_for(const std::vector<ModelState>& states, const std::string& id) const;
    void record_error(const std::string& sample_id, const std::string& stage,
                      const std::string& detail);
    void write_outputs();

    const config::RunConfig& cfg_;
    gateway::Gateway gw_;
    std::vector<std::string> priority_;

    dataset::FLCorpus fl_corpus_;
    dataset::VDCorpus vd_corpus_;
    std::unique_ptr<retrieval::EmbeddingProvider> embedder_;
    std::string corpus_hash_;

    std::vector<RowOutcome> rows_;
    std::vector<ordered_json> records_;
    std::vector<SampleError> errors_;
};

std::vector<const gateway::ModelConfig*> Runner::roster() const {
    std::vector<const gateway::ModelConfig*> models;
    if (cfg_.mode == config::Mode::CrossVal) {
        // Only pair members are dispatched; keep config order, no duplicates.
        std::set<std::string> wanted;
        for (const config::CrossValPair& p : cfg_.pairs) {
            wanted.insert(p.left);
            wanted.insert(p.right);
        }
        for (const gateway::ModelConfig& m : cfg_.models) {
            if (wanted.count(m.model_id) > 0) models.push_back(&m);
        }
    } else {
        for (const gateway::ModelConfig& m : cfg_.models) models.push_back(&m);
    }
    return models;
}

const ModelState* Runner::state_for(const std::vector<ModelState>& states,
                                    const std::string& id) const {
    for (const ModelState& s : states) {
        if (s.cfg->model_id == id) return &s;
    }
    return nullptr;
}

void Runner::record_error(const std::string& sample_id, const std::string& stage,
                          const std::string& detail) {
    errors_.push_back(SampleError{sample_id, stage, detail});
}

prompting::PromptBundle Runner::build_initial(const SampleInput& sample) {
    if (sample.task == Task::FaultLocalization) {
        const dataset::FLSample& s = *sample.fl;
        sbfl::SuspiciousnessRanking ranking;
        if (s.sbfl_hints && !s.sbfl_hints->empty()) {
            // Shipped hints win over recomputation; orderings may differ.
            ranking.technique_name = s.sbfl_hints->front().technique;
            for (const dataset::SbflHint& h : *s.sbfl_hints) {
                ranking.entries.push_back(sbfl::RankedLine{h.line, h.code, h.score});
            }
        } else {
            ranking = sbfl::rank_lines(*s.spectrum, s.source_code);
        }
        return prompting::build_fl_initial(s, sbfl::top_n_hints(ranking, cfg_.top_hints));
    }

    const dataset::VDSample& s = *sample.vd;
    retrieval::ExampleSelection selection;
    selection.random_examples = retrieval::select_random_examples(
        vd_corpus_.pool, 3, retrieval::derive_seed(cfg_.seed, s.id), s.id);
    std::vector<double> query;
    if (s.embedding) {
        query = *s.embedding;
    } else {
        query = embedder_->embed(s.source_code);
    }
    selection.similar_examples =
        retrieval::select_similar_examples(vd_corpus_.pool, query, 3, s.id);
    return prompting::build_vd_initial(s, selection, cfg_.cot);
}

std::vector<ModelState> Runner::dispatch(const prompting::PromptBundle& bundle,
                                         const std::vector<const gateway::ModelConfig*>& roster,
                                         const SampleInput& sample) {
    std::vector<gateway::BatchRequest> requests;
    requests.reserve(roster.size());
    for (const gateway::ModelConfig* cfg : roster) {
        requests.push_back(gateway::BatchRequest{bundle, *cfg});
    }
    const std::vector<gateway::BatchEntry> entries =
        gw_.complete_batch(requests, cfg_.parallelism, cfg_.cache_mode);

    std::vector<ModelState> states(roster.size());
    for (std::size_t i = 0; i < roster.size(); ++i) {
        ModelState& state = states[i];
        state.cfg = roster[i];
        state.fingerprint = gateway::request_fingerprint(
            roster[i]->model_id, bundle, gateway::effective_params(bundle, *roster[i]));
        if (entries[i].ok()) {
            state.response_text = entries[i].response->text;
            parse_state(state, sample);
        } else {
            state.gateway_error = entries[i].error;
            record_error(sample.id, "gateway",
                         roster[i]->model_id + ": " + entries[i].error.value_or("unknown"));
        }
    }
    return states;
}

void Runner::parse_state(ModelState& state, const SampleInput& sample) {
    try {
        if (sample.task == Task::FaultLocalization) {
            parsing::FLAnswer answer = parsing::parse_fl(*state.response_text);
            // Predictions outside the sample are dropped here, at scoring
            // time, with a record of what was removed.
            std::vector<parsing::FaultLocation> kept;
            for (const parsing::FaultLocation& loc : answer.locations) {
                if (loc.line >= 1 && loc.line <= sample.fl->line_count()) {
                    kept.push_back(loc);
                } else {
                    state.dropped_lines.push_back(loc.line);
                }
            }
            answer.locations = std::move(kept);
            state.fl_answer = std::move(answer);
        } else {
            state.vd_answer = parsing::parse_vd(*state.response_text);
        }
    } catch (const parsing::ParseError& e) {
        state.parse_error = e.what();
        record_error(sample.id, "parse", state.cfg->model_id + ": " + e.what());
    }
}

void Runner::score_single(const SampleInput& sample, const std::vector<ModelState>& states,
                          ordered_json& record) {
    ordered_json results = ordered_json::array();
    for (const ModelState& state : states) {
        ordered_json r;
        r["row"] = state.cfg->model_id;
        RowOutcome& row = row_for(rows_, state.cfg->model_id);
        if (sample.task == Task::FaultLocalization) {
            const std::vector<int> lines =
                state.fl_answer ? state.fl_answer->lines() : std::vector<int>{};
            score_fl_row(row, sample.id, lines, sample.fl->ground_truth_lines);
            r["lines"] = fl_lines_json(lines);
            r["top1"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 1);
            r["top2"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 2);
            r["top3"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 3);
        } else {
            std::optional<Verdict> verdict;
            if (state.vd_answer) verdict = state.vd_answer->verdict;
            score_vd_row(row, sample.id, verdict, sample.vd->label);
            r["verdict"] = verdict ? ordered_json(std::string(to_string(*verdict))) : ordered_json();
            r["correct"] = verdict && *verdict == sample.vd->label;
        }
        results.push_back(std::move(r));
    }
    record["results"] = std::move(results);
}

void Runner::score_vote(const SampleInput& sample, const std::vector<ModelState>& states,
                        ordered_json& record) {
    ordered_json r;
    r["row"] = "vote";
    RowOutcome& row = row_for(rows_, "vote");

    if (sample.task == Task::FaultLocalization) {
        std::map<std::string, parsing::FLAnswer> answers;
        for (const ModelState& state : states) {
            if (state.fl_answer) answers[state.cfg->model_id] = *state.fl_answer;
        }
        std::vector<int> lines;
        if (answers.empty()) {
            record_error(sample.id, "vote", "no parseable answers");
            score_fl_row(row, sample.id, lines, sample.fl->ground_truth_lines);
        } else {
            const ensemble::EnsembleVerdict verdict = ensemble::vote_fl(answers, priority_, 3);
            lines = verdict.final_lines;
            score_fl_row(row, sample.id, lines, sample.fl->ground_truth_lines);
            record["vote"] = {{"final_lines", fl_lines_json(lines)},
                              {"tally", tally_json(verdict)},
                              {"tiebreaks", tiebreaks_json(verdict)}};
        }
        r["lines"] = fl_lines_json(lines);
        r["top1"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 1);
        r["top2"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 2);
        r["top3"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 3);
    } else {
        std::map<std::string, parsing::VDAnswer> answers;
        for (const ModelState& state : states) {
            if (state.vd_answer) answers[state.cfg->model_id] = *state.vd_answer;
        }
        std::optional<Verdict> final_verdict;
        if (answers.empty()) {
            record_error(sample.id, "vote", "no parseable answers");
        } else {
            const ensemble::EnsembleVerdict verdict = ensemble::vote_vd(answers, priority_);
            final_verdict = verdict.final_verdict;
            record["vote"] = {{"final_verdict", std::string(to_string(*verdict.final_verdict))},
                              {"tally", tally_json(verdict)},
                              {"tiebreaks", tiebreaks_json(verdict)}};
        }
        score_vd_row(row, sample.id, final_verdict, sample.vd->label);
        r["verdict"] =
            final_verdict ? ordered_json(std::string(to_string(*final_verdict))) : ordered_json();
        r["correct"] = final_verdict && *final_verdict == sample.vd->label;
    }
    record["results"] = ordered_json::array({std::move(r)});
}

void Runner::score_crossval(const SampleInput& sample, const prompting::PromptBundle& bundle,
                            const std::vector<ModelState>& states, ordered_json& record) {
    ordered_json results = ordered_json::array();
    ordered_json exchanges = ordered_json::array();

    for (const config::CrossValPair& pair : cfg_.pairs) {
        const ModelState* left = state_for(states, pair.left);
        const ModelState* right = state_for(states, pair.right);
        const std::string left_row_id = pair.left + "<=" + pair.right;
        const std::string right_row_id = pair.right + "<=" + pair.left;

        auto score_side = [&](const std::string& row_id, const ensemble::CrossValSide* side) {
            ordered_json r;
            r["row"] = row_id;
            RowOutcome& row = row_for(rows_, row_id);
            std::vector<int> lines;
            std::optional<Verdict> verdict;
            if (side != nullptr && side->refined && !side->error) {
                if (sample.task == Task::FaultLocalization) {
                    const auto& answer = std::get<parsing::FLAnswer>(*side->refined);
                    lines = evaluation::filter_lines_in_range(answer.lines(),
                                                              sample.fl->line_count());
                } else {
                    verdict = std::get<parsing::VDAnswer>(*side->refined).verdict;
                }
            }
            if (sample.task == Task::FaultLocalization) {
                score_fl_row(row, sample.id, lines, sample.fl->ground_truth_lines);
                r["lines"] = fl_lines_json(lines);
                r["top1"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 1);
                r["top2"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 2);
                r["top3"] = evaluation::topk_success(lines, sample.fl->ground_truth_lines, 3);
            } else {
                score_vd_row(row, sample.id, verdict, sample.vd->label);
                r["verdict"] =
                    verdict ? ordered_json(std::string(to_string(*verdict))) : ordered_json();
                r["correct"] = verdict && *verdict == sample.vd->label;
            }
            if (side != nullptr && side->error) r["error"] = *side->error;
            results.push_back(std::move(r));
        };

        if (left == nullptr || right == nullptr || !left->response_text || !right->response_text) {
            record_error(sample.id, "crossval",
                         left_row_id + ": missing initial answer for one side");
            score_side(left_row_id, nullptr);
            score_side(right_row_id, nullptr);
            continue;
        }

        ensemble::CrossValResult exchange = ensemble::cross_validate(
            gw_, sample.task, bundle, *left->cfg, *left->response_text, *right->cfg,
            *right->response_text, cfg_.validation_rounds, cfg_.cache_mode);

        for (const ensemble::CrossValSide* side : {&exchange.left, &exchange.right}) {
            if (side->error) {
                record_error(sample.id, "crossval", side->model_id + ": " + *side->error);
            }
        }
        ordered_json ex;
        ex["left"] = pair.left;
        ex["right"] = pair.right;
        ex["left_fingerprints"] = exchange.left.fingerprints;
        ex["right_fingerprints"] = exchange.right.fingerprints;
        exchanges.push_back(std::move(ex));

        score_side(left_row_id, &exchange.left);
        score_side(right_row_id, &exchange.right);
    }

    record["exchanges"] = std::move(exchanges);
    record["results"] = std::move(results);
}

void Runner::run_sample(const SampleInput& sample) {
    ordered_json record;
    record["sample_id"] = sample.id;
    record["task"] = std::string(to_string(sample.task));
    record["mode"] = std::string(to_string(cfg_.mode));
    record["template_version"] = prompting::kTemplateVersion;

    prompting::PromptBundle bundle;
    try {
        bundle = build_initial(sample);
    } catch (const std::exception& e) {
        record_error(sample.id, "prompt", e.what());
        record["error"] = e.what();
        // Every row this sample would have fed scores it as incorrect.
        std::vector<std::string> row_ids;
        if (cfg_.mode == config::Mode::Single) {
            for (const auto* m : roster()) row_ids.push_back(m->model_id);
        } else if (cfg_.mode == config::Mode::Vote) {
            row_ids.push_back("vote");
        } else {
            for (const config::CrossValPair& p : cfg_.pairs) {
                row_ids.push_back(p.left + "<=" + p.right);
                row_ids.push_back(p.right + "<=" + p.left);
            }
        }
        for (const std::string& row_id : row_ids) {
            RowOutcome& row = row_for(rows_, row_id);
            if (sample.task == Task::FaultLocalization) {
                score_fl_row(row, sample.id, {}, sample.fl->ground_truth_lines);
            } else {
                score_vd_row(row, sample.id, std::nullopt, sample.vd->label);
            }
        }
        records_.push_back(std::move(record));
        return;
    }

    const std::vector<const gateway::ModelConfig*> models = roster();
    const std::vector<ModelState> states = dispatch(bundle, models, sample);

    ordered_json model_records = ordered_json::array();
    for (const ModelState& state : states) model_records.push_back(model_record(state, sample.task));
    record["models"] = std::move(model_records);

    switch (cfg_.mode) {
        case config::Mode::Single: score_single(sample, states, record); break;
        case config::Mode::Vote: score_vote(sample, states, record); break;
        case config::Mode::CrossVal: score_crossval(sample, bundle, states, record); break;
    }
    records_.push_back(std::move(record));
}

RunResult Runner::execute() {
    config::validate(cfg_);

    std::vector<SampleInput> samples;
    if (cfg_.task == Task::FaultLocalization) {
        fl_corpus_ = dataset::load_fl_corpus(cfg_.corpus);
        for (const dataset::FLSample& s : fl_corpus_.samples) {
            samples.push_back(SampleInput{s.id, cfg_.task, &s, nullptr});
        }
    } else {
        vd_corpus_ = dataset::load_vd_corpus(cfg_.corpus);
        embedder_ = retrieval::make_embedding_provider(cfg_.embedding_provider,
                                                       vd_corpus_.pool.embedding_dim);
        for (const dataset::VDSample& s : vd_corpus_.test) {
            samples.push_back(SampleInput{s.id, cfg_.task, nullptr, &s});
        }
    }
    corpus_hash_ = dataset::corpus_content_hash(cfg_.corpus);

    // Pre-create rows in deterministic order so empty runs still report them.
    if (cfg_.mode == config::Mode::Single) {
        for (const auto* m : roster()) row_for(rows_, m->model_id);
    } else if (cfg_.mode == config::Mode::Vote) {
        row_for(rows_, "vote");
    } else {
        for (const config::CrossValPair& p : cfg_.pairs) {
            row_for(rows_, p.left + "<=" + p.right);
            row_for(rows_, p.right + "<=" + p.left);
        }
    }

    for (const SampleInput& sample : samples) run_sample(sample);

    write_outputs();

    RunResult result;
    result.manifest_path = cfg_.out_dir / "manifest.json";
    result.results_path = cfg_.out_dir / "results.jsonl";
    result.sample_count = static_cast<long>(samples.size());
    result.error_count = static_cast<long>(errors_.size());
    result.rows = rows_;
    return result;
}

void Runner::write_outputs() {
    fs::create_directories(cfg_.out_dir);

    io::write_jsonl(cfg_.out_dir / "results.jsonl", records_);

    const gateway::CacheStats stats = gw_.session_stats();

    ordered_json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["created_at"] = io::iso8601_utc_now();
    manifest["config"] = config_snapshot(cfg_);
    manifest["corpus"] = {{"path", cfg_.corpus.string()},
                          {"hash", corpus_hash_},
                          {"sample_count", records_.size()}};
    if (cfg_.task == Task::VulnerabilityDetection) {
        long vulnerable = 0;
        for (const dataset::VDSample& s : vd_corpus_.test) {
            if (s.label == Verdict::Vulnerable) ++vulnerable;
        }
        manifest["corpus"]["vulnerable"] = vulnerable;
        manifest["corpus"]["non_vulnerable"] =
            static_cast<long>(vd_corpus_.test.size()) - vulnerable;
    }
    manifest["cache"] = {{"hits", stats.hits}, {"misses", stats.misses}, {"writes", stats.writes}};
    manifest["rows"] = report::rows_json(cfg_.task, rows_, /*with_solved=*/true);
    ordered_json error_records = ordered_json::array();
    for (const SampleError& e : errors_) {
        error_records.push_back(
            {{"sample_id", e.sample_id}, {"stage", e.stage}, {"detail", e.detail}});
    }
    manifest["errors"] = std::move(error_records);
    io::write_file(cfg_.out_dir / "manifest.json", manifest.dump(2) + "\n");

    ordered_json report_json;
    report_json["task"] = std::string(to_string(cfg_.task));
    report_json["label"] = cfg_.label;
    report_json["corpus_hash"] = corpus_hash_;
    report_json["template_version"] = prompting::kTemplateVersion;
    report_json["baseline"] = nullptr;
    report_json["rows"] = report::rows_json(cfg_.task, rows_, /*with_solved=*/false);
    io::write_file(cfg_.out_dir / "report.json", report_json.dump(2) + "\n");

    io::write_file(cfg_.out_dir / "report.md",
                   report::render_markdown(cfg_.task, cfg_.label, rows_));
}

} // namespace

RunResult run(const config::RunConfig& config) {
    Runner runner(config);
    return runner.execute();
}

} // namespace sqakit::runner
