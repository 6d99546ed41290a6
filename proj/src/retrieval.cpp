#include "sqakit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sqakit/io.hpp"

namespace sqakit::retrieval {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size() || u.empty()) {
        throw RetrievalError(RetrievalError::Kind::DimMismatch,
                             "vector dims " + std::to_string(u.size()) + " vs " +
                                 std::to_string(v.size()));
    }
    const double dot = std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
    const double nu = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
    const double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (nu == 0.0 || nv == 0.0) {
        throw RetrievalError(RetrievalError::Kind::ZeroVector, "cosine similarity of a zero vector");
    }
    return dot / (nu * nv);
}

namespace {

// Rejection-sampled bound; std::uniform_int_distribution is not portable
// across standard libraries and would break cross-machine replay.
uint64_t bounded_rand(std::mt19937_64& rng, uint64_t bound) {
    const uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

std::vector<std::size_t> eligible_indices(const dataset::VDTrainingPool& pool,
                                          const std::string& exclude_id) {
    std::vector<std::size_t> idx;
    idx.reserve(pool.examples.size());
    for (std::size_t i = 0; i < pool.examples.size(); ++i) {
        if (!exclude_id.empty() && pool.examples[i].id == exclude_id) continue;
        idx.push_back(i);
    }
    return idx;
}

void require_pool_size(std::size_t available, int k) {
    if (k < 1 || available < static_cast<std::size_t>(k)) {
        throw RetrievalError(RetrievalError::Kind::PoolTooSmall,
                             "need " + std::to_string(k) + " examples, pool offers " +
                                 std::to_string(available));
    }
}

} // namespace

std::vector<LabeledExample> select_random_examples(const dataset::VDTrainingPool& pool, int k,
                                                   uint64_t seed, const std::string& exclude_id) {
    std::vector<std::size_t> idx = eligible_indices(pool, exclude_id);
    require_pool_size(idx.size(), k);

    std::mt19937_64 rng(seed);
    std::vector<LabeledExample> out;
    out.reserve(static_cast<std::size_t>(k));
    // Partial Fisher-Yates over the eligible index list.
    for (int i = 0; i < k; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(bounded_rand(rng, idx.size() - static_cast<std::size_t>(i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
        const dataset::VDSample& s = pool.examples[idx[static_cast<std::size_t>(i)]];
        out.push_back(LabeledExample{s.id, s.source_code, s.label});
    }
    return out;
}

std::vector<SimilarExample> select_similar_examples(const dataset::VDTrainingPool& pool,
                                                    std::span<const double> query_embedding, int k,
                                                    const std::string& exclude_id) {
    const std::vector<std::size_t> idx = eligible_indices(pool, exclude_id);
    require_pool_size(idx.size(), k);
    if (static_cast<int>(query_embedding.size()) != pool.embedding_dim) {
        throw RetrievalError(RetrievalError::Kind::DimMismatch,
                             "query embedding dim " + std::to_string(query_embedding.size()) +
                                 " vs pool dim " + std::to_string(pool.embedding_dim));
    }

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(idx.size());
    for (std::size_t i : idx) {
        scored.emplace_back(cosine_similarity(query_embedding, *pool.examples[i].embedding), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second; // tie: pool order
    });

    std::vector<SimilarExample> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const auto& [sim, pool_index] = scored[static_cast<std::size_t>(i)];
        const dataset::VDSample& s = pool.examples[pool_index];
        out.push_back(SimilarExample{s.id, s.source_code, s.label, sim});
    }
    return out;
}

uint64_t derive_seed(uint64_t run_seed, std::string_view sample_id) {
    uint64_t h = io::fnv1a64(sample_id);
    h ^= run_seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

std::vector<double> IdentityEmbeddingProvider::embed(std::string_view code) const {
    std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
    if (dim_ <= 0) return v;
    std::size_t i = 0;
    for (unsigned char c : code) {
        v[i % static_cast<std::size_t>(dim_)] += static_cast<double>(c);
        ++i;
    }
    // Keep magnitudes tame; cosine similarity ignores scaling anyway.
    for (double& x : v) x /= 255.0;
    return v;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const std::string& name, int dim) {
    if (name == "identity") return std::make_unique<IdentityEmbeddingProvider>(dim);
    throw RetrievalError(RetrievalError::Kind::UnknownProvider, "unknown embedding provider: " + name);
}

} // namespace sqakit::retrieval
