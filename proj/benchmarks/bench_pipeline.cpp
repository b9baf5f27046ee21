// Micro-benchmarks for the hot paths: exact vs graph search, fused
// re-ranking, and corpus scoring.

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "rsrag/metrics.hpp"
#include "rsrag/retrieval.hpp"
#include "rsrag/tokenizer.hpp"
#include "rsrag/vector_store.hpp"

namespace {

constexpr std::size_t kDim = 64;

rsrag::EmbeddingVector random_unit(std::mt19937_64& rng) {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    rsrag::EmbeddingVector v;
    v.values.resize(kDim);
    for (auto& x : v.values) x = gauss(rng);
    rsrag::normalize(v);
    return v;
}

rsrag::VectorStore make_store(std::size_t n, bool build_ann) {
    rsrag::VectorStore store(kDim);
    std::mt19937_64 rng(7);
    for (std::size_t i = 0; i < n; ++i) {
        std::string rid = "r" + std::to_string(i);
        store.upsert(rsrag::Modality::Text,
                     {rid + "#t0", rid, random_unit(rng), {{"text", "chunk"}}});
        store.upsert(rsrag::Modality::Image, {rid + "#img", rid, random_unit(rng), {}});
    }
    if (build_ann) store.build_ann();
    return store;
}

void BM_SearchExact(benchmark::State& state) {
    auto store = make_store(static_cast<std::size_t>(state.range(0)), false);
    std::mt19937_64 rng(99);
    auto q = random_unit(rng);
    for (auto _ : state) {
        auto hits = store.search(rsrag::Modality::Text, q.values, 10, /*exact=*/true);
        benchmark::DoNotOptimize(hits);
    }
}
BENCHMARK(BM_SearchExact)->Arg(1000)->Arg(10000);

void BM_SearchAnn(benchmark::State& state) {
    auto store = make_store(static_cast<std::size_t>(state.range(0)), true);
    std::mt19937_64 rng(99);
    auto q = random_unit(rng);
    for (auto _ : state) {
        auto hits = store.search(rsrag::Modality::Text, q.values, 10, /*exact=*/false);
        benchmark::DoNotOptimize(hits);
    }
}
BENCHMARK(BM_SearchAnn)->Arg(1000)->Arg(10000);

void BM_MergeRerank(benchmark::State& state) {
    auto store = make_store(1000, false);
    std::mt19937_64 rng(99);
    auto qt = random_unit(rng);
    auto qi = random_unit(rng);
    rsrag::RetrievalParams params;
    params.tau = static_cast<std::size_t>(state.range(0));
    params.top_k = 5;
    params.alpha = 0.9;
    params.exact_search = true;
    for (auto _ : state) {
        auto cands = rsrag::generate_candidates(store, &qt, &qi, params);
        auto merged = rsrag::merge_candidates(store, cands, &qt, &qi, params.alpha);
        rsrag::rerank(merged);
        benchmark::DoNotOptimize(merged);
    }
}
BENCHMARK(BM_MergeRerank)->Arg(10)->Arg(50)->Arg(200);

void BM_ScoreCorpus(benchmark::State& state) {
    std::vector<rsrag::ScoredItem> items;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> word(0, 49);
    auto sentence = [&](std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
            if (!s.empty()) s += ' ';
            s += "w" + std::to_string(word(rng));
        }
        return s;
    };
    for (int i = 0; i < static_cast<int>(state.range(0)); ++i)
        items.push_back({rsrag::tokenize(sentence(20)),
                         {rsrag::tokenize(sentence(20)), rsrag::tokenize(sentence(18))}});
    for (auto _ : state) {
        auto report = rsrag::score_corpus(items);
        benchmark::DoNotOptimize(report);
    }
}
BENCHMARK(BM_ScoreCorpus)->Arg(100)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
