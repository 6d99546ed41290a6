#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sqakit/retrieval.hpp"

using namespace sqakit;
using namespace sqakit::retrieval;

namespace {

dataset::VDTrainingPool make_pool(const std::vector<std::vector<double>>& embeddings) {
    dataset::VDTrainingPool pool;
    pool.embedding_dim = static_cast<int>(embeddings.front().size());
    int n = 0;
    for (const auto& e : embeddings) {
        dataset::VDSample s;
        s.id = "pool-" + std::to_string(n);
        s.source_code = "code_" + std::to_string(n);
        s.label = n % 2 == 0 ? Verdict::Vulnerable : Verdict::NonVulnerable;
        s.embedding = e;
        pool.examples.push_back(std::move(s));
        ++n;
    }
    return pool;
}

// Plain dot/norm computation, independent of the library routine.
double cosine_reference(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

} // namespace

TEST_CASE("cosine similarity on pinned inputs") {
    const std::vector<double> a{1, 2, 3};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));

    const std::vector<double> x{1, 0};
    const std::vector<double> y{0, 1};
    CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));

    // 1/sqrt(2) = 0.70711 to five decimals, cross-checked by the independent
    // dot/norm route; both routes must agree to 1e-9.
    const std::vector<double> z{1, 1};
    const double reference = cosine_reference(x, z);
    CHECK(reference == doctest::Approx(0.7071067811865475).epsilon(1e-12));
    CHECK(std::abs(cosine_similarity(x, z) - reference) < 1e-9);
    CHECK(format_fixed(cosine_similarity(x, z), 5) == "0.70711");
}

TEST_CASE("cosine similarity error cases") {
    const std::vector<double> a{1, 2};
    const std::vector<double> b{1, 2, 3};
    const std::vector<double> zero{0, 0};
    CHECK_THROWS_AS(cosine_similarity(a, b), RetrievalError);
    CHECK_THROWS_AS(cosine_similarity(a, zero), RetrievalError);
}

TEST_CASE("random selection is deterministic and distinct") {
    const auto pool = make_pool(std::vector<std::vector<double>>(10, {1.0, 0.0}));
    const auto first = select_random_examples(pool, 3, 42);
    const auto second = select_random_examples(pool, 3, 42);
    REQUIRE(first.size() == 3);
    for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i].id == second[i].id);

    std::set<std::string> ids;
    for (const auto& e : first) ids.insert(e.id);
    CHECK(ids.size() == 3);
}

TEST_CASE("k equal to pool size selects the whole pool") {
    const auto pool = make_pool(std::vector<std::vector<double>>(6, {1.0, 0.0}));
    const auto selected = select_random_examples(pool, 6, 7);
    std::set<std::string> ids;
    for (const auto& e : selected) ids.insert(e.id);
    CHECK(ids.size() == 6);
}

TEST_CASE("different seeds eventually differ") {
    const auto pool = make_pool(std::vector<std::vector<double>>(10, {1.0, 0.0}));
    const auto base = select_random_examples(pool, 3, 0);
    bool any_difference = false;
    for (uint64_t seed = 1; seed <= 100 && !any_difference; ++seed) {
        const auto other = select_random_examples(pool, 3, seed);
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (other[i].id != base[i].id) any_difference = true;
        }
    }
    CHECK(any_difference);
}

TEST_CASE("pool too small") {
    const auto pool = make_pool(std::vector<std::vector<double>>(6, {1.0, 0.0}));
    CHECK_THROWS_AS(select_random_examples(pool, 7, 0), RetrievalError);
    const std::vector<double> q{1.0, 0.0};
    CHECK_THROWS_AS(select_similar_examples(pool, q, 7), RetrievalError);
    // Exclusion shrinks the effective pool.
    CHECK_THROWS_AS(select_random_examples(pool, 6, 0, "pool-0"), RetrievalError);
}

TEST_CASE("similar selection: identical embedding comes first with similarity 1") {
    const auto pool = make_pool({{1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 0}, {0, 0, 1}, {1, 1, 1}, {2, 0, 0.1}});
    const std::vector<double> query{0, 1, 0};
    const auto similar = select_similar_examples(pool, query, 3);
    REQUIRE(similar.size() == 3);
    CHECK(similar[0].id == "pool-1");
    CHECK(similar[0].similarity == doctest::Approx(1.0));
    CHECK(similar[0].similarity >= similar[1].similarity);
    CHECK(similar[1].similarity >= similar[2].similarity);
}

TEST_CASE("similar selection equals brute-force sort on a random pool") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::vector<double>> embeddings;
    for (int i = 0; i < 8; ++i) {
        embeddings.push_back({dist(rng), dist(rng), dist(rng), dist(rng)});
    }
    const auto pool = make_pool(embeddings);
    const std::vector<double> query{dist(rng), dist(rng), dist(rng), dist(rng)};

    std::vector<std::pair<double, std::string>> expected;
    for (const auto& s : pool.examples) {
        expected.emplace_back(cosine_reference(query, *s.embedding), s.id);
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    const auto similar = select_similar_examples(pool, query, 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(similar[static_cast<std::size_t>(i)].id == expected[static_cast<std::size_t>(i)].second);
        CHECK(similar[static_cast<std::size_t>(i)].similarity ==
              doctest::Approx(expected[static_cast<std::size_t>(i)].first));
    }
}

TEST_CASE("similarity order is invariant under positive rescaling") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::vector<double>> embeddings;
    for (int i = 0; i < 8; ++i) {
        embeddings.push_back({dist(rng), dist(rng), dist(rng)});
    }
    auto pool = make_pool(embeddings);
    const std::vector<double> query{0.3, -0.2, 0.9};
    const auto baseline = select_similar_examples(pool, query, 8);

    // Rescale one pool embedding and the query by positive constants.
    for (double& x : *pool.examples[3].embedding) x *= 17.5;
    std::vector<double> scaled_query = query;
    for (double& x : scaled_query) x *= 0.01;
    const auto rescaled = select_similar_examples(pool, scaled_query, 8);

    for (std::size_t i = 0; i < baseline.size(); ++i) {
        CHECK(baseline[i].id == rescaled[i].id);
    }
}

TEST_CASE("query sample is excluded from selections") {
    const auto pool = make_pool(std::vector<std::vector<double>>(7, {1.0, 0.5}));
    const std::vector<double> query{1.0, 0.5};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        for (const auto& e : select_random_examples(pool, 3, seed, "pool-2")) {
            CHECK(e.id != "pool-2");
        }
    }
    for (const auto& e : select_similar_examples(pool, query, 6, "pool-2")) {
        CHECK(e.id != "pool-2");
    }
}

TEST_CASE("derive_seed depends on both run seed and sample id") {
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
}

TEST_CASE("identity embedding provider is deterministic with fixed dimension") {
    IdentityEmbeddingProvider provider(8);
    const auto a = provider.embed("int main() { return 0; }");
    const auto b = provider.embed("int main() { return 0; }");
    CHECK(a == b);
    CHECK(a.size() == 8);
    CHECK(provider.embed("different code") != a);
    CHECK_THROWS_AS(make_embedding_provider("codebert", 8), RetrievalError);
    CHECK(make_embedding_provider("identity", 4)->dimension() == 4);
}
