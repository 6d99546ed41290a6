#include "sqakit/dataset.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "sqakit/io.hpp"

namespace sqakit::dataset {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void missing(const std::string& field, const std::string& where) {
    throw CorpusError(CorpusError::Kind::MissingField, "missing field '" + field + "' in " + where);
}

const json& require(const json& j, const char* field, const std::string& where) {
    const auto it = j.find(field);
    if (it == j.end() || it->is_null()) missing(field, where);
    return *it;
}

json load_manifest(const fs::path& dir, Task expected_task) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw CorpusError(CorpusError::Kind::Malformed, "no manifest.json in " + dir.string());
    }
    json manifest;
    try {
        manifest = json::parse(io::read_file(manifest_path));
    } catch (const json::exception& e) {
        throw CorpusError(CorpusError::Kind::Malformed,
                          "unparseable manifest.json: " + std::string(e.what()));
    }
    const std::string task = require(manifest, "task", "manifest.json").get<std::string>();
    if (task_from_string(task) != expected_task) {
        throw CorpusError(CorpusError::Kind::Malformed,
                          "manifest task '" + task + "' does not match requested corpus kind");
    }
    return manifest;
}

TestOutcome test_outcome_from_json(const json& j, const std::string& where) {
    TestOutcome outcome;
    outcome.input_repr = require(j, "input", where).get<std::string>();
    const std::string kind = require(j, "kind", where).get<std::string>();
    if (kind == "error") {
        ErrorOutcome e;
        e.error_name = require(j, "error_name", where).get<std::string>();
        e.line = require(j, "line", where).get<int>();
        e.code_content = require(j, "code_content", where).get<std::string>();
        outcome.kind = std::move(e);
    } else if (kind == "wrong_output") {
        WrongOutputOutcome w;
        w.actual = require(j, "actual", where).get<std::string>();
        w.expected = require(j, "expected", where).get<std::string>();
        outcome.kind = std::move(w);
    } else {
        throw CorpusError(CorpusError::Kind::Malformed,
                          "unknown test outcome kind '" + kind + "' in " + where);
    }
    return outcome;
}

ordered_json test_outcome_to_json(const TestOutcome& outcome) {
    ordered_json j;
    j["input"] = outcome.input_repr;
    if (const auto* e = std::get_if<ErrorOutcome>(&outcome.kind)) {
        j["kind"] = "error";
        j["error_name"] = e->error_name;
        j["line"] = e->line;
        j["code_content"] = e->code_content;
    } else {
        const auto& w = std::get<WrongOutputOutcome>(outcome.kind);
        j["kind"] = "wrong_output";
        j["actual"] = w.actual;
        j["expected"] = w.expected;
    }
    return j;
}

VDSample vd_sample_from_json(const json& j, const std::string& where, bool embedding_required) {
    VDSample s;
    s.id = require(j, "id", where).get<std::string>();
    const std::string ctx = where + " sample '" + s.id + "'";
    s.source_code = require(j, "source_code", ctx).get<std::string>();
    try {
        s.label = verdict_from_string(require(j, "label", ctx).get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw CorpusError(CorpusError::Kind::Malformed, ctx + ": " + e.what());
    }
    if (j.contains("cwe") && !j["cwe"].is_null()) s.cwe = j["cwe"].get<std::string>();
    if (j.contains("embedding") && !j["embedding"].is_null()) {
        s.embedding = j["embedding"].get<std::vector<double>>();
    } else if (embedding_required) {
        missing("embedding", ctx);
    }
    return s;
}

ordered_json vd_sample_to_json(const VDSample& s) {
    ordered_json j;
    j["id"] = s.id;
    j["source_code"] = s.source_code;
    j["label"] = std::string(to_string(s.label));
    if (s.cwe) j["cwe"] = *s.cwe;
    if (s.embedding) j["embedding"] = *s.embedding;
    return j;
}

void check_unique_id(std::set<std::string>& seen, const std::string& id, const std::string& where) {
    if (!seen.insert(id).second) {
        throw CorpusError(CorpusError::Kind::DuplicateId, "duplicate sample id '" + id + "' in " + where);
    }
}

} // namespace

FLCorpus load_fl_corpus(const fs::path& dir) {
    load_manifest(dir, Task::FaultLocalization);

    FLCorpus corpus;
    std::set<std::string> seen_ids;
    for (const json& j : io::read_jsonl(dir / "samples.jsonl")) {
        FLSample s;
        s.id = require(j, "id", "samples.jsonl").get<std::string>();
        check_unique_id(seen_ids, s.id, "samples.jsonl");
        const std::string ctx = "sample '" + s.id + "'";
        s.source_code = require(j, "source_code", ctx).get<std::string>();
        s.code_description = require(j, "code_description", ctx).get<std::string>();
        for (const json& t : require(j, "test_results", ctx)) {
            s.test_results.push_back(test_outcome_from_json(t, ctx));
        }
        const int lines = s.line_count();
        for (const json& g : require(j, "ground_truth_lines", ctx)) {
            const int line = g.get<int>();
            if (line < 1 || line > lines) {
                throw CorpusError(CorpusError::Kind::LineOutOfRange,
                                  ctx + ": ground-truth line " + std::to_string(line) +
                                      " outside 1.." + std::to_string(lines));
            }
            s.ground_truth_lines.insert(line);
        }
        if (s.ground_truth_lines.empty()) {
            throw CorpusError(CorpusError::Kind::Malformed, ctx + ": empty ground_truth_lines");
        }
        for (const TestOutcome& t : s.test_results) {
            if (const auto* e = std::get_if<ErrorOutcome>(&t.kind)) {
                if (e->line < 1 || e->line > lines) {
                    throw CorpusError(CorpusError::Kind::LineOutOfRange,
                                      ctx + ": test error line " + std::to_string(e->line) +
                                          " outside 1.." + std::to_string(lines));
                }
            }
        }
        if (j.contains("sbfl_hints") && !j["sbfl_hints"].is_null()) {
            std::vector<SbflHint> hints;
            for (const json& h : j["sbfl_hints"]) {
                hints.push_back(SbflHint{
                    require(h, "line", ctx).get<int>(),
                    require(h, "code", ctx).get<std::string>(),
                    require(h, "technique", ctx).get<std::string>(),
                    require(h, "score", ctx).get<double>(),
                });
            }
            s.sbfl_hints = std::move(hints);
        }
        const fs::path spectrum_path = dir / "spectra" / (s.id + ".json");
        if (fs::exists(spectrum_path)) {
            try {
                s.spectrum = sbfl::spectrum_from_json(json::parse(io::read_file(spectrum_path)));
            } catch (const json::exception& e) {
                throw CorpusError(CorpusError::Kind::Malformed,
                                  ctx + ": unparseable spectrum: " + e.what());
            }
            if (s.spectrum->line_count != lines) {
                throw CorpusError(CorpusError::Kind::LineOutOfRange,
                                  ctx + ": spectrum line_count " + std::to_string(s.spectrum->line_count) +
                                      " does not match source (" + std::to_string(lines) + ")");
            }
        }
        if (!s.spectrum && !s.sbfl_hints) {
            throw CorpusError(CorpusError::Kind::MissingField,
                              ctx + ": needs a coverage spectrum or shipped SBFL hints");
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

VDCorpus load_vd_corpus(const fs::path& dir) {
    const json manifest = load_manifest(dir, Task::VulnerabilityDetection);
    const int embedding_dim = require(manifest, "embedding_dim", "manifest.json").get<int>();

    VDCorpus corpus;
    corpus.pool.embedding_dim = embedding_dim;

    const fs::path pool_path = dir / "pool.jsonl";
    if (!fs::exists(pool_path)) {
        throw CorpusError(CorpusError::Kind::Malformed, "no pool.jsonl in " + dir.string());
    }
    std::set<std::string> pool_ids;
    for (const json& j : io::read_jsonl(pool_path)) {
        VDSample s = vd_sample_from_json(j, "pool.jsonl", /*embedding_required=*/true);
        check_unique_id(pool_ids, s.id, "pool.jsonl");
        if (static_cast<int>(s.embedding->size()) != embedding_dim) {
            throw CorpusError(CorpusError::Kind::EmbeddingDimMismatch,
                              "pool sample '" + s.id + "' embedding has dim " +
                                  std::to_string(s.embedding->size()) + ", expected " +
                                  std::to_string(embedding_dim));
        }
        corpus.pool.examples.push_back(std::move(s));
    }
    if (static_cast<int>(corpus.pool.examples.size()) < kMinPoolSize) {
        throw CorpusError(CorpusError::Kind::PoolTooSmall,
                          "training pool has " + std::to_string(corpus.pool.examples.size()) +
                              " examples, need at least " + std::to_string(kMinPoolSize));
    }

    std::set<std::string> test_ids;
    for (const json& j : io::read_jsonl(dir / "samples.jsonl")) {
        VDSample s = vd_sample_from_json(j, "samples.jsonl", /*embedding_required=*/false);
        check_unique_id(test_ids, s.id, "samples.jsonl");
        if (s.embedding && static_cast<int>(s.embedding->size()) != embedding_dim) {
            throw CorpusError(CorpusError::Kind::EmbeddingDimMismatch,
                              "test sample '" + s.id + "' embedding has dim " +
                                  std::to_string(s.embedding->size()) + ", expected " +
                                  std::to_string(embedding_dim));
        }
        corpus.test.push_back(std::move(s));
    }
    return corpus;
}

void save_fl_corpus(const FLCorpus& corpus, const fs::path& dir) {
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["task"] = "fl";
    manifest["sample_count"] = corpus.samples.size();
    io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::vector<json> rows;
    for (const FLSample& s : corpus.samples) {
        ordered_json j;
        j["id"] = s.id;
        j["source_code"] = s.source_code;
        j["code_description"] = s.code_description;
        ordered_json tests = ordered_json::array();
        for (const TestOutcome& t : s.test_results) tests.push_back(test_outcome_to_json(t));
        j["test_results"] = std::move(tests);
        j["ground_truth_lines"] = s.ground_truth_lines;
        if (s.sbfl_hints) {
            ordered_json hints = ordered_json::array();
            for (const SbflHint& h : *s.sbfl_hints) {
                hints.push_back({{"line", h.line},
                                 {"code", h.code},
                                 {"technique", h.technique},
                                 {"score", h.score}});
            }
            j["sbfl_hints"] = std::move(hints);
        }
        rows.push_back(std::move(j));
        if (s.spectrum) {
            io::write_file(dir / "spectra" / (s.id + ".json"),
                           sbfl::spectrum_to_json(*s.spectrum).dump(2) + "\n");
        }
    }
    io::write_jsonl(dir / "samples.jsonl", rows);
}

void save_vd_corpus(const VDCorpus& corpus, const fs::path& dir) {
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["task"] = "vd";
    manifest["sample_count"] = corpus.test.size();
    manifest["pool_count"] = corpus.pool.examples.size();
    manifest["embedding_dim"] = corpus.pool.embedding_dim;
    io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::vector<json> rows;
    for (const VDSample& s : corpus.test) rows.push_back(vd_sample_to_json(s));
    io::write_jsonl(dir / "samples.jsonl", rows);

    std::vector<json> pool_rows;
    for (const VDSample& s : corpus.pool.examples) pool_rows.push_back(vd_sample_to_json(s));
    io::write_jsonl(dir / "pool.jsonl", pool_rows);
}

std::string corpus_content_hash(const fs::path& dir) {
    std::string blob;
    auto feed = [&blob](const fs::path& p) {
        if (!fs::exists(p)) return;
        blob += p.filename().string();
        blob += '\0';
        blob += io::read_file(p);
        blob += '\0';
    };
    feed(dir / "manifest.json");
    feed(dir / "samples.jsonl");
    feed(dir / "pool.jsonl");
    const fs::path spectra = dir / "spectra";
    if (fs::exists(spectra)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(spectra)) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const fs::path& p : files) feed(p);
    }
    return io::sha256_hex(blob);
}

} // namespace sqakit::dataset
