#include "rsrag/config.hpp"

#include <cstdio>
#include <cstdlib>

#include "rsrag/error.hpp"
#include "rng.hpp"

namespace rsrag {

using nlohmann::json;

std::string_view fusion_mode_label(FusionMode mode) {
    return mode == FusionMode::Model ? "model" : "deterministic";
}

FusionMode fusion_mode_from_label(std::string_view label) {
    if (label == "model") return FusionMode::Model;
    if (label == "deterministic") return FusionMode::Deterministic;
    throw Error(ErrorCode::ConfigInvalid, "unknown fusion mode: " + std::string(label));
}

std::string_view generator_kind_label(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::EchoMock: return "echo";
        case GeneratorKind::LabelMock: return "label";
        case GeneratorKind::Remote: return "remote";
    }
    return "echo";
}

GeneratorKind generator_kind_from_label(std::string_view label) {
    if (label == "echo") return GeneratorKind::EchoMock;
    if (label == "label") return GeneratorKind::LabelMock;
    if (label == "remote") return GeneratorKind::Remote;
    throw Error(ErrorCode::ConfigInvalid, "unknown generator kind: " + std::string(label));
}

std::string_view embedder_kind_label(EmbedderKind kind) {
    return kind == EmbedderKind::Remote ? "remote" : "mock";
}

EmbedderKind embedder_kind_from_label(std::string_view label) {
    if (label == "mock") return EmbedderKind::Mock;
    if (label == "remote") return EmbedderKind::Remote;
    throw Error(ErrorCode::ConfigInvalid, "unknown embedder kind: " + std::string(label));
}

void PipelineConfig::validate() const {
    retrieval_params().validate();
    if (chunk_budget < kMinChunkBudget)
        throw Error(ErrorCode::ConfigInvalid,
                    "chunk_budget must be >= " + std::to_string(kMinChunkBudget));
    if (fusion_max_tokens == 0)
        throw Error(ErrorCode::ConfigInvalid, "fusion_max_tokens must be positive");
    if (max_tokens == 0) throw Error(ErrorCode::ConfigInvalid, "max_tokens must be positive");
    if (temperature < 0.0) throw Error(ErrorCode::ConfigInvalid, "temperature must be >= 0");
    if (fusion_mode == FusionMode::Model && fusion_endpoint.empty())
        throw Error(ErrorCode::ConfigInvalid, "model fusion requires fusion_endpoint");
    embedder.validate();
    generator.validate();
}

RetrievalParams PipelineConfig::retrieval_params() const {
    return {tau, top_k, alpha, exact_search, ef};
}

json PipelineConfig::to_json() const {
    return {
        {"tau", tau},
        {"top_k", top_k},
        {"alpha", alpha},
        {"exact_search", exact_search},
        {"ef", ef},
        {"chunk_budget", chunk_budget},
        {"fusion_mode", std::string(fusion_mode_label(fusion_mode))},
        {"fusion_max_tokens", fusion_max_tokens},
        {"fusion_endpoint", fusion_endpoint},
        {"instruction", instruction},
        {"knowledge_header", knowledge_header},
        {"max_tokens", max_tokens},
        {"temperature", temperature},
        {"embedder",
         {{"provider", std::string(embedder_kind_label(embedder.provider))},
          {"dim", embedder.dim},
          {"endpoint", embedder.endpoint},
          {"model_tag", embedder.model_tag},
          {"timeout_ms", embedder.timeout_ms}}},
        {"generator",
         {{"kind", std::string(generator_kind_label(generator.kind))},
          {"endpoint", generator.endpoint},
          {"timeout_ms", generator.timeout_ms}}},
        {"knowledge_base", "full"},
        {"seed", seed},
    };
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    c.tau = j.value("tau", c.tau);
    c.top_k = j.value("top_k", c.top_k);
    c.alpha = j.value("alpha", c.alpha);
    c.exact_search = j.value("exact_search", c.exact_search);
    c.ef = j.value("ef", c.ef);
    c.chunk_budget = j.value("chunk_budget", c.chunk_budget);
    if (j.contains("fusion_mode"))
        c.fusion_mode = fusion_mode_from_label(j["fusion_mode"].get<std::string>());
    c.fusion_max_tokens = j.value("fusion_max_tokens", c.fusion_max_tokens);
    c.fusion_endpoint = j.value("fusion_endpoint", c.fusion_endpoint);
    c.instruction = j.value("instruction", c.instruction);
    c.knowledge_header = j.value("knowledge_header", c.knowledge_header);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.temperature = j.value("temperature", c.temperature);
    if (j.contains("embedder")) {
        const json& e = j["embedder"];
        if (e.contains("provider"))
            c.embedder.provider = embedder_kind_from_label(e["provider"].get<std::string>());
        c.embedder.dim = e.value("dim", c.embedder.dim);
        c.embedder.endpoint = e.value("endpoint", c.embedder.endpoint);
        c.embedder.model_tag = e.value("model_tag", c.embedder.model_tag);
        c.embedder.timeout_ms = e.value("timeout_ms", c.embedder.timeout_ms);
    }
    if (j.contains("generator")) {
        const json& g = j["generator"];
        if (g.contains("kind"))
            c.generator.kind = generator_kind_from_label(g["kind"].get<std::string>());
        c.generator.endpoint = g.value("endpoint", c.generator.endpoint);
        c.generator.timeout_ms = g.value("timeout_ms", c.generator.timeout_ms);
    }
    c.seed = j.value("seed", c.seed);
    return c;
}

std::string PipelineConfig::hash() const {
    std::uint64_t h = detail::fnv1a64(to_json().dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PipelineConfig PipelineConfig::from_env() {
    PipelineConfig c;
    c.embedder = EmbedderProfile::from_env();
    c.generator = GeneratorProfile::from_env();
    if (const char* url = std::getenv("RSRAG_LLM_URL"); url && *url) c.fusion_endpoint = url;
    return c;
}

}  // namespace rsrag
