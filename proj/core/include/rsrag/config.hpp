#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rsrag/context.hpp"
#include "rsrag/embedding.hpp"
#include "rsrag/generation.hpp"
#include "rsrag/retrieval.hpp"

namespace rsrag {

std::string_view fusion_mode_label(FusionMode mode);
FusionMode fusion_mode_from_label(std::string_view label);

std::string_view generator_kind_label(GeneratorKind kind);
GeneratorKind generator_kind_from_label(std::string_view label);

std::string_view embedder_kind_label(EmbedderKind kind);
EmbedderKind embedder_kind_from_label(std::string_view label);

/// Everything a pipeline run depends on. Serialized into every report and
/// HTTP response (as a canonical JSON snapshot plus a short hash) so results
/// stay attributable to their exact configuration.
struct PipelineConfig {
    // retrieval
    std::size_t tau = 50;
    std::size_t top_k = 1;
    double alpha = 0.9;
    bool exact_search = false;
    std::size_t ef = 0;  // 0 = index default beam

    // context
    std::size_t chunk_budget = kDefaultChunkBudget;
    FusionMode fusion_mode = FusionMode::Deterministic;
    std::size_t fusion_max_tokens = kDefaultFusionCap;
    std::string fusion_endpoint;  // model mode only

    // prompts; empty strings mean "use the task preset"
    std::string instruction;
    std::string knowledge_header;

    // generation
    std::size_t max_tokens = 4096;
    double temperature = 0.0;

    // providers
    EmbedderProfile embedder;
    GeneratorProfile generator;

    std::uint64_t seed = 42;

    void validate() const;  // Errors: ConfigInvalid, AlphaOutOfRange
    RetrievalParams retrieval_params() const;

    /// Canonical snapshot; from_json(to_json(c)) == c.
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);

    /// 16-hex-digit digest of the canonical snapshot.
    std::string hash() const;

    static PipelineConfig from_env();  // provider endpoints + snapshot knobs
};

}  // namespace rsrag
