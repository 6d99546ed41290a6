#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sqakit/core.hpp"
#include "sqakit/sbfl.hpp"

namespace sqakit::dataset {

class CorpusError : public std::runtime_error {
public:
    enum class Kind {
        MissingField,
        LineOutOfRange,
        DuplicateId,
        EmbeddingDimMismatch,
        PoolTooSmall,
        Malformed,
    };

    CorpusError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct ErrorOutcome {
    std::string error_name;
    int line = 0; // 1-based, within the owning sample
    std::string code_content;

    bool operator==(const ErrorOutcome&) const = default;
};

struct WrongOutputOutcome {
    std::string actual;
    std::string expected;

    bool operator==(const WrongOutputOutcome&) const = default;
};

struct TestOutcome {
    std::string input_repr;
    std::variant<ErrorOutcome, WrongOutputOutcome> kind;

    bool operator==(const TestOutcome&) const = default;
};

struct SbflHint {
    int line = 0;
    std::string code;
    std::string technique;
    double score = 0.0;

    bool operator==(const SbflHint&) const = default;
};

struct FLSample {
    std::string id;
    std::string source_code;
    std::string code_description;
    std::vector<TestOutcome> test_results;
    std::set<int> ground_truth_lines;
    std::optional<sbfl::CoverageSpectrum> spectrum;
    std::optional<std::vector<SbflHint>> sbfl_hints; // shipped with the corpus

    int line_count() const { return sqakit::line_count(source_code); }

    bool operator==(const FLSample&) const = default;
};

struct VDSample {
    std::string id;
    std::string source_code;
    Verdict label = Verdict::NonVulnerable;
    std::optional<std::string> cwe;
    std::optional<std::vector<double>> embedding;

    bool operator==(const VDSample&) const = default;
};

struct VDTrainingPool {
    std::vector<VDSample> examples; // each with label and embedding
    int embedding_dim = 0;

    bool operator==(const VDTrainingPool&) const = default;
};

/// Minimum pool size: 3 random + 3 similar examples must be drawable.
inline constexpr int kMinPoolSize = 6;

struct FLCorpus {
    std::vector<FLSample> samples;

    bool operator==(const FLCorpus&) const = default;
};

struct VDCorpus {
    std::vector<VDSample> test;
    VDTrainingPool pool;

    bool operator==(const VDCorpus&) const = default;
};

/// Corpus directory layout: manifest.json, samples.jsonl, optional
/// pool.jsonl, optional spectra/<sample-id>.json. All text UTF-8.
FLCorpus load_fl_corpus(const std::filesystem::path& dir);
VDCorpus load_vd_corpus(const std::filesystem::path& dir);

void save_fl_corpus(const FLCorpus& corpus, const std::filesystem::path& dir);
void save_vd_corpus(const VDCorpus& corpus, const std::filesystem::path& dir);

/// Content hash over manifest + samples + pool + spectra, stable across
/// machines for identical corpus bytes.
std::string corpus_content_hash(const std::filesystem::path& dir);

} // namespace sqakit::dataset
