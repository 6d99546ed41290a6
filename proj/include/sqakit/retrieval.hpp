#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sqakit/core.hpp"
#include "sqakit/dataset.hpp"

namespace sqakit::retrieval {

class RetrievalError : public std::runtime_error {
public:
    enum class Kind { DimMismatch, ZeroVector, PoolTooSmall, UnknownProvider };

    RetrievalError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct LabeledExample {
    std::string id;
    std::string code;
    Verdict label = Verdict::NonVulnerable;
};

struct SimilarExample {
    std::string id;
    std::string code;
    Verdict label = Verdict::NonVulnerable;
    double similarity = 0.0;
};

/// Few-shot examples for one vulnerability-detection prompt: k random picks
/// plus the k most similar training examples by embedding cosine similarity.
struct ExampleSelection {
    std::vector<LabeledExample> random_examples;
    std::vector<SimilarExample> similar_examples; // similarity descending
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Deterministic in (pool order, k, seed). The query sample, when present in
/// the pool, is never selected.
std::vector<LabeledExample> select_random_examples(const dataset::VDTrainingPool& pool, int k,
                                                   uint64_t seed, const std::string& exclude_id = {});

/// Exact top-k by cosine similarity, descending; ties broken by pool order.
std::vector<SimilarExample> select_similar_examples(const dataset::VDTrainingPool& pool,
                                                    std::span<const double> query_embedding, int k,
                                                    const std::string& exclude_id = {});

/// Stable per-sample seed derivation from the run seed, so random example
/// draws are reproducible per test item across machines.
uint64_t derive_seed(uint64_t run_seed, std::string_view sample_id);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(std::string_view code) const = 0;
    virtual int dimension() const = 0;
};

/// Test-oriented provider deriving a vector from the code bytes alone:
/// byte values are folded into `dim` buckets. Deterministic everywhere.
class IdentityEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit IdentityEmbeddingProvider(int dim) : dim_(dim) {}

    std::vector<double> embed(std::string_view code) const override;
    int dimension() const override { return dim_; }

private:
    int dim_;
};

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const std::string& name, int dim);

} // namespace sqakit::retrieval
