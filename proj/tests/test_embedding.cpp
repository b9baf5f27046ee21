#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rsrag/embedding.hpp"
#include "rsrag/error.hpp"
#include "test_support.hpp"

using namespace rsrag;
using nlohmann::json;

TEST_CASE("mock embeddings are deterministic unit vectors") {
    auto a = mock_embed("hello world", 64, "tag:text");
    auto b = mock_embed("hello world", 64, "tag:text");
    CHECK(a.values == b.values);
    CHECK(a.dim() == 64);
    CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-6));

    // Different text, salt, or dimension changes the vector.
    auto c = mock_embed("hello worlds", 64, "tag:text");
    CHECK(a.values != c.values);
    auto d = mock_embed("hello world", 64, "tag:image");
    CHECK(a.values != d.values);
    auto e = mock_embed("hello world", 32, "tag:text");
    CHECK(e.dim() == 32);
}

TEST_CASE("mock embeddings look isotropic") {
    // Cosines of unrelated inputs concentrate near zero (|cos| ~ 1/sqrt(d)).
    const std::size_t dim = 64;
    double total = 0.0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        auto a = mock_embed("left " + std::to_string(i), dim, "s:text");
        auto b = mock_embed("right " + std::to_string(i), dim, "s:text");
        total += std::abs(dot(a.values, b.values));
    }
    double mean_abs = total / n;
    CHECK(mean_abs > 0.03);
    CHECK(mean_abs < 0.2);
}

TEST_CASE("gateway embed_text validates input") {
    EmbeddingGateway gateway(EmbedderProfile{});
    CHECK_THROWS_AS(gateway.embed_text(""), Error);
    CHECK_THROWS_AS(gateway.embed_text("   \t\n"), Error);

    auto v = gateway.embed_text("a knowledge chunk");
    CHECK(v.dim() == gateway.dim());
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-6));

    auto batch = gateway.embed_texts({"one", "two", "three"});
    REQUIRE(batch.size() == 3);
    CHECK(batch[0].values == gateway.embed_text("one").values);
    CHECK(batch[2].values == gateway.embed_text("three").values);
}

TEST_CASE("gateway embed_image hashes file bytes, else the ref string") {
    EmbeddingGateway gateway(EmbedderProfile{});
    testsupport::TempDir dir("rsrag-embed");
    auto file = dir.path() / "image.bin";
    {
        std::ofstream out(file, std::ios::binary);
        out << "fake image bytes";
    }
    auto from_file = gateway.embed_image(file.string());
    auto from_bytes = mock_embed("fake image bytes", gateway.dim(),
                                 gateway.profile().model_tag + ":image");
    CHECK(from_file.values == from_bytes.values);

    // Unreadable path: the ref string itself is hashed, deterministically.
    auto by_ref = gateway.embed_image("no/such/file.png");
    CHECK(by_ref.values == gateway.embed_image("no/such/file.png").values);
    CHECK(by_ref.values != from_file.values);
}

TEST_CASE("dot and normalize guard dimensions") {
    EmbeddingVector a{{1.0f, 0.0f}};
    EmbeddingVector b{{0.6f, 0.8f}};
    // float32 storage: 0.6f is ~4e-8 away from the double literal
    CHECK(dot(a.values, b.values) == doctest::Approx(0.6).epsilon(1e-6));
    std::vector<float> c{1.0f, 2.0f, 3.0f};
    CHECK_THROWS_AS(dot(a.values, c), Error);

    EmbeddingVector z{{0.0f, 0.0f}};
    CHECK_THROWS_AS(normalize(z), Error);
    EmbeddingVector n{{3.0f, 4.0f}};
    normalize(n);
    CHECK(n.values[0] == doctest::Approx(0.6f).epsilon(1e-6));
    CHECK(n.values[1] == doctest::Approx(0.8f).epsilon(1e-6));
}

TEST_CASE("profile validation") {
    EmbedderProfile p;
    CHECK_NOTHROW(p.validate());
    p.dim = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.dim = 64;
    p.provider = EmbedderKind::Remote;
    p.endpoint = "";
    CHECK_THROWS_AS(p.validate(), Error);
    p.endpoint = "http://127.0.0.1:1";
    CHECK_NOTHROW(p.validate());
}

namespace {

/// Loopback embedding server returning deterministic unit vectors.
struct FakeEmbedServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    std::atomic<int> fail_first{0};  // respond 500 to this many requests

    explicit FakeEmbedServer(std::size_t dim) {
        server.Post("/embed", [this, dim](const httplib::Request& req,
                                          httplib::Response& res) {
            ++requests;
            if (fail_first.fetch_sub(1) > 0) {
                res.status = 500;
                return;
            }
            json body = json::parse(req.body);
            json vectors = json::array();
            for (const auto& item : body.at("items")) {
                std::vector<double> v(dim, 0.0);
                // Not normalized on purpose: the gateway must normalize.
                v[item.get<std::string>().size() % dim] = 2.0;
                vectors.push_back(v);
            }
            res.set_content(json{{"dim", dim}, {"vectors", vectors}}.dump(),
                            "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeEmbedServer() {
        server.stop();
        thread.join();
    }

    EmbedderProfile profile(std::size_t dim) const {
        EmbedderProfile p;
        p.provider = EmbedderKind::Remote;
        p.dim = dim;
        p.endpoint = "http://127.0.0.1:" + std::to_string(port);
        p.timeout_ms = 2000;
        p.max_retries = 2;
        return p;
    }
};

}  // namespace

TEST_CASE("remote embedding round-trip, normalization and retries") {
    const std::size_t dim = 8;
    FakeEmbedServer fake(dim);
    EmbeddingGateway gateway(fake.profile(dim));

    auto v = gateway.embed_text("abc");
    CHECK(v.dim() == dim);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-6));  // normalized at the gateway
    CHECK(v.values[3] == doctest::Approx(1.0f).epsilon(1e-6));

    auto batch = gateway.embed_texts({"a", "ab"});
    REQUIRE(batch.size() == 2);
    CHECK(batch[0].values[1] == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(batch[1].values[2] == doctest::Approx(1.0f).epsilon(1e-6));

    // A transient 500 is retried.
    fake.fail_first = 1;
    CHECK_NOTHROW(gateway.embed_text("retry me"));
}

TEST_CASE("remote embedding failures surface as ProviderUnavailable") {
    const std::size_t dim = 8;

    SUBCASE("unreachable endpoint") {
        EmbedderProfile p;
        p.provider = EmbedderKind::Remote;
        p.dim = dim;
        p.endpoint = "http://127.0.0.1:9";  // discard port, nothing listens
        p.timeout_ms = 200;
        p.max_retries = 1;
        EmbeddingGateway gateway(p);
        try {
            gateway.embed_text("x");
            FAIL("expected ProviderUnavailable");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ProviderUnavailable);
        }
    }

    SUBCASE("wrong dimension in reply") {
        FakeEmbedServer fake(dim);
        EmbeddingGateway gateway(fake.profile(dim + 1));  // expects 9, server sends 8
        CHECK_THROWS_AS(gateway.embed_text("x"), Error);
    }
}

TEST_CASE("profile from_env reads the documented variables") {
    ::setenv("RSRAG_EMBEDDER_URL", "http://127.0.0.1:4242", 1);
    ::setenv("RSRAG_EMBED_DIM", "128", 1);
    ::setenv("RSRAG_HTTP_TIMEOUT_MS", "1234", 1);
    EmbedderProfile p = EmbedderProfile::from_env();
    CHECK(p.provider == EmbedderKind::Remote);
    CHECK(p.endpoint == "http://127.0.0.1:4242");
    CHECK(p.dim == 128);
    CHECK(p.timeout_ms == 1234);

    ::unsetenv("RSRAG_EMBEDDER_URL");
    ::unsetenv("RSRAG_EMBED_DIM");
    ::unsetenv("RSRAG_HTTP_TIMEOUT_MS");
    p = EmbedderProfile::from_env();
    CHECK(p.provider == EmbedderKind::Mock);
    CHECK(p.dim == 64);
}
