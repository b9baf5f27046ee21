#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "rsrag/error.hpp"
#include "rsrag/retrieval.hpp"
#include "test_support.hpp"

using namespace rsrag;

namespace {

/// Independent reference scorer: exhaustive max-over-chunks text similarity,
/// max image similarity, fused score, total-order sort, cut to top_k.
std::vector<RankedCandidate> reference_retrieve(const VectorStore& store,
                                                const EmbeddingVector* q_text,
                                                const EmbeddingVector* q_image, double alpha,
                                                std::size_t top_k) {
    std::map<std::string, std::vector<std::pair<std::string, double>>> text_sims;
    std::map<std::string, double> image_sims;
    for (const CollectionEntry& e : store.collection(Modality::Text).entries()) {
        text_sims[e.record_id];
        if (q_text)
            text_sims[e.record_id].emplace_back(e.entry_id,
                                                dot(q_text->values, e.vector.values));
    }
    for (const CollectionEntry& e : store.collection(Modality::Image).entries()) {
        if (!q_image) continue;
        double s = dot(q_image->values, e.vector.values);
        auto [it, fresh] = image_sims.emplace(e.record_id, s);
        if (!fresh) it->second = std::max(it->second, s);
    }

    std::vector<RankedCandidate> out;
    for (auto& [id, chunks] : text_sims) {
        RankedCandidate c;
        c.record_id = id;
        std::sort(chunks.begin(), chunks.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        c.supporting_chunks = chunks;
        c.text_similarity = chunks.empty() ? 0.0 : chunks.front().second;
        auto img = image_sims.find(id);
        c.image_similarity = img == image_sims.end() ? 0.0 : img->second;
        c.fused_score = (1.0 - alpha) * c.text_similarity + alpha * c.image_similarity;
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
        return a.record_id < b.record_id;
    });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

}  // namespace

TEST_CASE("fuse_score blends the two modalities") {
    CHECK(fuse_score(0.5, 1.0, 0.9) == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(fuse_score(0.7, 0.2, 0.0) == doctest::Approx(0.7).epsilon(1e-12));   // text only
    CHECK(fuse_score(0.7, 0.2, 1.0) == doctest::Approx(0.2).epsilon(1e-12));   // image only
    CHECK(fuse_score(0.4, 0.8, 0.5) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_THROWS_AS(fuse_score(0.5, 0.5, -0.01), Error);
    CHECK_THROWS_AS(fuse_score(0.5, 0.5, 1.01), Error);
}

TEST_CASE("retrieval params validate their ranges") {
    RetrievalParams p;
    CHECK_NOTHROW(p.validate());
    p.top_k = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.top_k = 101;
    p.tau = 50;
    CHECK_THROWS_AS(p.validate(), Error);  // top_k must be <= 2*tau
    p.top_k = 100;
    CHECK_NOTHROW(p.validate());
    p.alpha = 1.5;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("generate_candidates respects tau and modality availability") {
    VectorStore store = testsupport::make_vector_store(30, 8, 17);
    std::mt19937_64 rng(1);
    auto qt = testsupport::random_unit(rng, 8);
    auto qi = testsupport::random_unit(rng, 8);

    RetrievalParams params;
    params.tau = 5;
    params.exact_search = true;

    auto both = generate_candidates(store, &qt, &qi, params);
    CHECK(both.text_hits.size() == 5);
    CHECK(both.image_hits.size() == 5);

    auto text_only = generate_candidates(store, &qt, nullptr, params);
    CHECK(text_only.text_hits.size() == 5);
    CHECK(text_only.image_hits.empty());

    params.tau = 0;
    auto none = generate_candidates(store, &qt, &qi, params);
    CHECK(none.text_hits.empty());
    CHECK(none.image_hits.empty());
}

TEST_CASE("merge_candidates recomputes both similarities for the union") {
    VectorStore store(4);
    // Record a: strong text, weak image. Record b: the reverse. Record c:
    // text-only presence in the hit lists but still gets its true image score.
    store.upsert(Modality::Text, {"a#t0", "a", {{1, 0, 0, 0}}, {}});
    store.upsert(Modality::Text, {"a#t1", "a", {{0, 1, 0, 0}}, {}});
    store.upsert(Modality::Image, {"a#img", "a", {{0, 1, 0, 0}}, {}});
    store.upsert(Modality::Text, {"b#t0", "b", {{0, 1, 0, 0}}, {}});
    store.upsert(Modality::Image, {"b#img", "b", {{1, 0, 0, 0}}, {}});
    store.upsert(Modality::Text, {"c#t0", "c", {{0.6f, 0.8f, 0, 0}}, {}});
    store.upsert(Modality::Image, {"c#img", "c", {{0.8f, 0.6f, 0, 0}}, {}});

    EmbeddingVector qt{{1, 0, 0, 0}};
    EmbeddingVector qi{{1, 0, 0, 0}};

    RetrievalParams params;
    params.tau = 2;  // image list misses record c; merge must still score it
    params.exact_search = true;
    auto cands = generate_candidates(store, &qt, &qi, params);
    auto merged = merge_candidates(store, cands, &qt, &qi, 0.5);

    REQUIRE(merged.size() == 3);
    std::map<std::string, RankedCandidate> by_id;
    for (auto& c : merged) by_id[c.record_id] = c;

    CHECK(by_id["a"].text_similarity == doctest::Approx(1.0));   // max over two chunks
    CHECK(by_id["a"].image_similarity == doctest::Approx(0.0));
    CHECK(by_id["a"].fused_score == doctest::Approx(0.5));
    REQUIRE(by_id["a"].supporting_chunks.size() == 2);
    CHECK(by_id["a"].supporting_chunks[0].first == "a#t0");  // best chunk first
    CHECK(by_id["a"].supporting_chunks[0].second ==
          doctest::Approx(by_id["a"].text_similarity));

    CHECK(by_id["b"].fused_score == doctest::Approx(0.5));
    CHECK(by_id["c"].text_similarity == doctest::Approx(0.6));
    CHECK(by_id["c"].image_similarity == doctest::Approx(0.8));
    CHECK(by_id["c"].fused_score == doctest::Approx(0.7));
}

TEST_CASE("merge_candidates demands both embeddings for interior alpha") {
    VectorStore store = testsupport::make_vector_store(5, 8, 2);
    std::mt19937_64 rng(3);
    auto qt = testsupport::random_unit(rng, 8);

    RetrievalParams params;
    params.tau = 3;
    params.exact_search = true;
    auto cands = generate_candidates(store, &qt, nullptr, params);

    try {
        merge_candidates(store, cands, &qt, nullptr, 0.5);
        FAIL("expected MissingModalityEmbedding");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingModalityEmbedding);
    }
    // At the endpoint the missing side carries zero weight, so it is allowed.
    CHECK_NOTHROW(merge_candidates(store, cands, &qt, nullptr, 0.0));
    CHECK_THROWS_AS(merge_candidates(store, cands, &qt, nullptr, 1.5), Error);
}

TEST_CASE("rerank orders by fused score with id tie-break") {
    std::vector<RankedCandidate> cands(4);
    cands[0].record_id = "d";
    cands[0].fused_score = 0.5;
    cands[1].record_id = "b";
    cands[1].fused_score = 0.9;
    cands[2].record_id = "a";
    cands[2].fused_score = 0.5;
    cands[3].record_id = "c";
    cands[3].fused_score = 0.9;
    rerank(cands);
    CHECK(cands[0].record_id == "b");
    CHECK(cands[1].record_id == "c");
    CHECK(cands[2].record_id == "a");
    CHECK(cands[3].record_id == "d");
}

TEST_CASE("retrieve validates its inputs") {
    EmbeddingGateway gateway(EmbedderProfile{});
    RetrievalParams params;
    params.exact_search = true;

    VectorStore empty(gateway.dim());
    CHECK_THROWS_AS(retrieve(empty, gateway, {"text", ""}, params), Error);  // StoreEmpty

    VectorStore store = testsupport::make_vector_store(4, gateway.dim(), 1);
    try {
        retrieve(store, gateway, {"", ""}, params);
        FAIL("expected EmptyInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyInput);
    }
}

TEST_CASE("single-modality queries force the alpha endpoint with a warning") {
    EmbeddingGateway gateway(EmbedderProfile{});
    VectorStore store = testsupport::make_vector_store(10, gateway.dim(), 23);

    RetrievalParams params;
    params.tau = 10;
    params.top_k = 3;
    params.alpha = 0.5;
    params.exact_search = true;

    auto text_only = retrieve(store, gateway, {"some words", ""}, params);
    CHECK(text_only.alpha_used == 0.0);
    REQUIRE(text_only.warnings.size() == 1);
    CHECK(text_only.warnings[0] == "image missing from query; alpha forced to 0");

    auto image_only = retrieve(store, gateway, {"", "some/image.png"}, params);
    CHECK(image_only.alpha_used == 1.0);
    REQUIRE(image_only.warnings.size() == 1);
    CHECK(image_only.warnings[0] == "text missing from query; alpha forced to 1");

    auto both = retrieve(store, gateway, {"some words", "some/image.png"}, params);
    CHECK(both.alpha_used == 0.5);
    CHECK(both.warnings.empty());
}

TEST_CASE("a record planted in both modalities ranks first at any alpha") {
    EmbeddingGateway gateway(EmbedderProfile{});
    VectorStore store = testsupport::make_vector_store(50, gateway.dim(), 31);

    const std::string planted = "planted";
    const std::string query_text = "the exact planted query text";
    const std::string image_ref = "planted/image/ref.png";
    store.upsert(Modality::Text, {planted + "#t0", planted, gateway.embed_text(query_text),
                                  {{"text", query_text}}});
    store.upsert(Modality::Image,
                 {planted + "#img", planted, gateway.embed_image(image_ref), {}});

    RetrievalParams params;
    params.tau = 50;
    params.top_k = 5;
    params.exact_search = true;
    for (double alpha : {0.0, 0.3, 0.5, 0.9, 1.0}) {
        params.alpha = alpha;
        auto result = retrieve(store, gateway, {query_text, image_ref}, params);
        REQUIRE(result.candidates.size() == 5);
        CHECK(result.candidates[0].record_id == planted);
        CHECK(result.candidates[0].fused_score == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("retrieve matches the reference scorer on random stores") {
    const std::size_t dim = 16;
    EmbedderProfile profile;
    profile.dim = dim;
    EmbeddingGateway gateway(profile);

    for (std::uint64_t seed : {100ull, 200ull, 300ull}) {
        VectorStore store = testsupport::make_vector_store(40, dim, seed, 3);
        Query query{"query " + std::to_string(seed), "image-" + std::to_string(seed)};
        EmbeddingVector qt = gateway.embed_text(query.text);
        EmbeddingVector qi = gateway.embed_image(query.image_ref);

        RetrievalParams params;
        params.tau = 40;
        params.top_k = 10;
        params.exact_search = true;
        for (double alpha : {0.0, 0.3, 0.7, 1.0}) {
            params.alpha = alpha;
            auto got = retrieve(store, gateway, query, params);
            auto want = reference_retrieve(store, &qt, &qi, alpha, params.top_k);
            REQUIRE(got.candidates.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                CAPTURE(alpha);
                CAPTURE(i);
                CHECK(got.candidates[i].record_id == want[i].record_id);
                CHECK(got.candidates[i].fused_score ==
                      doctest::Approx(want[i].fused_score).epsilon(1e-12));
                CHECK(got.candidates[i].text_similarity ==
                      doctest::Approx(want[i].text_similarity).epsilon(1e-12));
                CHECK(got.candidates[i].image_similarity ==
                      doctest::Approx(want[i].image_similarity).epsilon(1e-12));
                REQUIRE(got.candidates[i].supporting_chunks.size() ==
                        want[i].supporting_chunks.size());
                CHECK(got.candidates[i].supporting_chunks.front().first ==
                      want[i].supporting_chunks.front().first);
            }
        }
    }
}
