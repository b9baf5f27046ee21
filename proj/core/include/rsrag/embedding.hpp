#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rsrag {

/// Dense unit-norm float32 vector in the shared embedding space R^d.
/// Normalization happens once, at the gateway, so cosine similarity equals
/// the dot product everywhere downstream.
struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const;
};

double dot(std::span<const float> a, std::span<const float> b);

enum class EmbedderKind { Mock, Remote };

struct EmbedderProfile {
    EmbedderKind provider = EmbedderKind::Mock;
    std::size_t dim = 64;
    std::string endpoint;         // remote only
    std::string model_tag = "mock-clip";
    int timeout_ms = 10000;       // per-request connect+read timeout
    int max_retries = 2;          // retries after the first attempt
    int parallelism = 4;          // bound for concurrent remote batches

    /// Throws ConfigInvalid when dim == 0 or a remote profile lacks an endpoint.
    void validate() const;

    /// Reads RSRAG_EMBEDDER_URL, RSRAG_EMBED_DIM and RSRAG_HTTP_TIMEOUT_MS;
    /// a non-empty URL selects the remote provider.
    static EmbedderProfile from_env();
};

/// Keyed-hash projection: FNV-1a(salt, bytes) seeds a SplitMix64 draw of
/// `dim` uniform components, L2-normalized. Pure function of its inputs and
/// byte-stable across platforms, which is what makes planted-similarity
/// tests possible (equal bytes + equal salt => identical vector).
EmbeddingVector mock_embed(std::span<const std::uint8_t> bytes, std::size_t dim,
                           std::string_view salt);
EmbeddingVector mock_embed(std::string_view bytes, std::size_t dim, std::string_view salt);

/// Uniform front-end to the paired image/text encoders. Shareable across
/// threads; the mock path is reentrant and lock-free.
class EmbeddingGateway {
public:
    explicit EmbeddingGateway(EmbedderProfile profile);

    const EmbedderProfile& profile() const noexcept { return profile_; }
    std::size_t dim() const noexcept { return profile_.dim; }

    /// Errors: EmptyInput (blank after trim), ProviderUnavailable.
    EmbeddingVector embed_text(std::string_view text) const;
    std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) const;

    /// The mock hashes the file bytes, falling back to the ref string when
    /// the file cannot be read. Errors: ProviderUnavailable, UnresolvableRef.
    EmbeddingVector embed_image(const std::string& image_ref) const;

private:
    std::vector<EmbeddingVector> remote_embed(const std::string& kind,
                                              const std::vector<std::string>& items) const;

    EmbedderProfile profile_;
};

/// L2-normalize in place (double accumulation). Throws ZeroVector when the
/// norm is numerically zero.
void normalize(EmbeddingVector& v);

}  // namespace rsrag
