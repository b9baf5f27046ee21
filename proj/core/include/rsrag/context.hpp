#pragma once

#include <string>
#include <vector>

#include "rsrag/dataset.hpp"

namespace rsrag {

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

struct TextChunk {
    std::string record_id;
    std::size_t chunk_index = 0;
    std::vector<std::string> field_names;  // fields fully or partially covered
    std::string text;
    std::size_t token_count = 0;

    bool operator==(const TextChunk&) const = default;
};

inline constexpr std::size_t kMinChunkBudget = 32;
inline constexpr std::size_t kDefaultChunkBudget = 256;

/// Field-aligned chunking: whole sections are packed greedily up to `budget`
/// tokens; an oversized section is split at sentence boundaries, and an
/// oversized sentence at token boundaries as a last resort. Concatenating the
/// chunk texts reproduces the document text byte for byte.
/// Errors: BudgetTooSmall (budget < 32).
std::vector<TextChunk> chunk_document(const KnowledgeDocument& doc, std::size_t budget);

// ---------------------------------------------------------------------------
// Context fusion
// ---------------------------------------------------------------------------

struct Snippet {
    std::string record_id;
    std::string text;
    double score = 0.0;  // fused retrieval score of the source record
};

enum class FusionMode { Deterministic, Model };

struct FusedContext {
    std::string text;
    std::vector<std::pair<std::string, double>> source_records;  // rank order
    FusionMode fusion_mode = FusionMode::Deterministic;
};

/// Remote fusion model client ({"snippets": [...], "max_tokens": n} ->
/// {"text": "..."}). Configured from RSRAG_LLM_URL.
class FusionClient {
public:
    FusionClient(std::string endpoint, int timeout_ms = 10000, int max_retries = 2);

    /// Errors: ProviderUnavailable.
    std::string fuse(const std::vector<std::string>& snippets, std::size_t max_tokens) const;

    const std::string& endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
    int timeout_ms_;
    int max_retries_;
};

inline constexpr std::size_t kDefaultFusionCap = 1024;

/// Deterministic mode: sentence-level dedup, concatenation in the given
/// (score) order, truncation to `max_tokens` at sentence granularity (the
/// first sentence is token-truncated if nothing else fits). Model mode sends
/// one request to `client`; source attribution is kept either way.
/// Errors: EmptyInput; ProviderUnavailable (model mode, nullptr or failing
/// client).
FusedContext fuse_context(const std::vector<Snippet>& snippets, FusionMode mode,
                          std::size_t max_tokens = kDefaultFusionCap,
                          const FusionClient* client = nullptr);

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

struct Prompt {
    std::string instruction;       // task-specific instruction
    std::string query_text;        // may be empty (captioning)
    std::string knowledge_header;  // introduces the retrieved context
    std::string context;           // fused knowledge text
    std::string rendered;          // the four parts joined with single newlines
};

/// Errors: EmptyInput (instruction or knowledge_header blank).
Prompt build_prompt(const std::string& instruction, const std::string& query_text,
                    const std::string& knowledge_header, const FusedContext& context);

struct TaskPreset {
    std::string instruction;
    std::string knowledge_header = "Retrieved context:";
    double alpha = 0.9;
};

TaskPreset preset_for_task(Task task);

}  // namespace rsrag
