#include "rsrag/embedding.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rsrag/error.hpp"
#include "rng.hpp"

namespace rsrag {

using nlohmann::json;

double EmbeddingVector::norm() const {
    double sum = 0.0;
    for (float v : values) sum += static_cast<double>(v) * v;
    return std::sqrt(sum);
}

double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw Error(ErrorCode::DimensionMismatch,
                    "dot: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * b[i];
    return sum;
}

void normalize(EmbeddingVector& v) {
    double n = v.norm();
    if (n < 1e-12) throw Error(ErrorCode::ZeroVector, "cannot normalize zero vector");
    for (float& x : v.values) x = static_cast<float>(x / n);
}

void EmbedderProfile::validate() const {
    if (dim == 0) throw Error(ErrorCode::ConfigInvalid, "embedder dim must be positive");
    if (provider == EmbedderKind::Remote && endpoint.empty())
        throw Error(ErrorCode::ConfigInvalid, "remote embedder requires an endpoint");
}

EmbedderProfile EmbedderProfile::from_env() {
    EmbedderProfile p;
    if (const char* url = std::getenv("RSRAG_EMBEDDER_URL"); url && *url) {
        p.provider = EmbedderKind::Remote;
        p.endpoint = url;
    }
    if (const char* d = std::getenv("RSRAG_EMBED_DIM"); d && *d) p.dim = std::strtoul(d, nullptr, 10);
    if (const char* t = std::getenv("RSRAG_HTTP_TIMEOUT_MS"); t && *t)
        p.timeout_ms = static_cast<int>(std::strtol(t, nullptr, 10));
    return p;
}

namespace {

std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string_view trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

EmbeddingVector mock_embed(std::span<const std::uint8_t> bytes, std::size_t dim,
                           std::string_view salt) {
    if (dim == 0) throw Error(ErrorCode::ConfigInvalid, "mock_embed dim must be positive");
    std::uint64_t seed = detail::fnv1a64(salt);
    const std::uint8_t sep = 0x1f;
    seed = detail::fnv1a64(&sep, 1, seed);
    seed = detail::fnv1a64(bytes.data(), bytes.size(), seed);

    detail::SplitMix64 rng{seed};
    EmbeddingVector v;
    v.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        v.values[i] = static_cast<float>(2.0 * rng.next_unit() - 1.0);
    double n = v.norm();
    if (n < 1e-12) {
        v.values[0] = 1.0f;  // unreachable in practice, keeps the unit-norm contract total
        n = 1.0;
    }
    for (float& x : v.values) x = static_cast<float>(x / n);
    return v;
}

EmbeddingVector mock_embed(std::string_view bytes, std::size_t dim, std::string_view salt) {
    return mock_embed(as_bytes(bytes), dim, salt);
}

EmbeddingGateway::EmbeddingGateway(EmbedderProfile profile) : profile_(std::move(profile)) {
    profile_.validate();
}

EmbeddingVector EmbeddingGateway::embed_text(std::string_view text) const {
    if (trim(text).empty()) throw Error(ErrorCode::EmptyInput, "embed_text: blank input");
    if (profile_.provider == EmbedderKind::Mock)
        return mock_embed(text, profile_.dim, profile_.model_tag + ":text");
    auto out = remote_embed("text", {std::string(text)});
    return std::move(out.front());
}

std::vector<EmbeddingVector> EmbeddingGateway::embed_texts(
    const std::vector<std::string>& texts) const {
    for (const auto& t : texts)
        if (trim(t).empty()) throw Error(ErrorCode::EmptyInput, "embed_texts: blank item");
    if (profile_.provider == EmbedderKind::Mock) {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(mock_embed(t, profile_.dim, profile_.model_tag + ":text"));
        return out;
    }
    return remote_embed("text", texts);
}

namespace {

bool read_file_bytes(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return true;
}

std::string base64_encode(std::string_view data) {
    static const char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < data.size()) {
        std::uint32_t n = (static_cast<std::uint8_t>(data[i]) << 16) |
                          (static_cast<std::uint8_t>(data[i + 1]) << 8) |
                          static_cast<std::uint8_t>(data[i + 2]);
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back(alphabet[n & 63]);
        i += 3;
    }
    if (i + 1 == data.size()) {
        std::uint32_t n = static_cast<std::uint8_t>(data[i]) << 16;
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.append("==");
    } else if (i + 2 == data.size()) {
        std::uint32_t n = (static_cast<std::uint8_t>(data[i]) << 16) |
                          (static_cast<std::uint8_t>(data[i + 1]) << 8);
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

}  // namespace

EmbeddingVector EmbeddingGateway::embed_image(const std::string& image_ref) const {
    if (profile_.provider == EmbedderKind::Mock) {
        std::string bytes;
        if (read_file_bytes(image_ref, bytes))
            return mock_embed(bytes, profile_.dim, profile_.model_tag + ":image");
        return mock_embed(image_ref, profile_.dim, profile_.model_tag + ":image");
    }
    std::string bytes;
    if (!read_file_bytes(image_ref, bytes)) {
        // URIs are forwarded untouched; only local paths must resolve.
        if (image_ref.find("://") == std::string::npos)
            throw Error(ErrorCode::UnresolvableRef, "cannot read image: " + image_ref);
        auto out = remote_embed("image", {image_ref});
        return std::move(out.front());
    }
    auto out = remote_embed("image", {base64_encode(bytes)});
    return std::move(out.front());
}

std::vector<EmbeddingVector> EmbeddingGateway::remote_embed(
    const std::string& kind, const std::vector<std::string>& items) const {
    json request = {{"kind", kind}, {"items", items}};
    const std::string body = request.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= profile_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        httplib::Client client(profile_.endpoint);
        client.set_connection_timeout(0, profile_.timeout_ms * 1000);
        client.set_read_timeout(profile_.timeout_ms / 1000, (profile_.timeout_ms % 1000) * 1000);
        auto res = client.Post("/embed", body, "application/json");
        if (!res) {
            last_error = "no response from " + profile_.endpoint;
            continue;
        }
        if (res->status >= 500) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorCode::ProviderUnavailable,
                        "embedder rejected request: status " + std::to_string(res->status));
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("dim") || !reply.contains("vectors"))
            throw Error(ErrorCode::ProviderUnavailable, "malformed embedder response");
        std::size_t dim = reply.at("dim").get<std::size_t>();
        if (dim != profile_.dim)
            throw Error(ErrorCode::DimensionMismatch,
                        "embedder returned dim " + std::to_string(dim) + ", expected " +
                            std::to_string(profile_.dim));
        std::vector<EmbeddingVector> out;
        for (const auto& row : reply.at("vectors")) {
            EmbeddingVector v;
            v.values = row.get<std::vector<float>>();
            if (v.dim() != dim)
                throw Error(ErrorCode::DimensionMismatch, "ragged vector in embedder response");
            normalize(v);
            out.push_back(std::move(v));
        }
        if (out.size() != items.size())
            throw Error(ErrorCode::ProviderUnavailable, "embedder returned wrong item count");
        return out;
    }
    throw Error(ErrorCode::ProviderUnavailable,
                "embedder unreachable after " + std::to_string(profile_.max_retries + 1) +
                    " attempts (" + last_error + ")");
}

}  // namespace rsrag
