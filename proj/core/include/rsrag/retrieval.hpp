#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsrag/embedding.hpp"
#include "rsrag/vector_store.hpp"

namespace rsrag {

struct RetrievalParams {
    std::size_t tau = 50;       // per-modality candidate depth
    std::size_t top_k = 1;      // final number of records returned
    double alpha = 0.9;         // image weight in the fused score
    bool exact_search = false;  // full scan instead of the graph index
    std::size_t ef = 0;         // ANN beam override (0 = index default)

    void validate() const;  // Errors: ConfigInvalid, AlphaOutOfRange
};

struct Query {
    std::string text;       // empty => image-only query
    std::string image_ref;  // empty => text-only query
};

struct RankedCandidate {
    std::string record_id;
    double text_similarity = 0.0;   // best chunk similarity, 0 if no text entries
    double image_similarity = 0.0;  // 0 if no image entry
    double fused_score = 0.0;
    // The record's text chunks scored against the query, best first.
    std::vector<std::pair<std::string, double>> supporting_chunks;
};

struct CandidateSet {
    RankedList text_hits;
    RankedList image_hits;
};

struct RetrievalResult {
    std::vector<RankedCandidate> candidates;  // at most top_k, rank order
    double alpha_used = 0.0;
    std::vector<std::string> warnings;
};

/// (1 - alpha) * s_text + alpha * s_image. Errors: AlphaOutOfRange.
double fuse_score(double s_text, double s_image, double alpha);

/// Top-tau per available modality. A null query embedding skips that side;
/// tau == 0 yields empty lists.
CandidateSet generate_candidates(const VectorStore& store,
                                 const EmbeddingVector* q_text,
                                 const EmbeddingVector* q_image,
                                 const RetrievalParams& params);

/// Union of candidate record_ids, each scored against both modalities by
/// direct lookup (a record absent from one hit list still gets its true
/// similarity there; a record with no entries in a modality scores 0).
/// Errors: AlphaOutOfRange; MissingModalityEmbedding when alpha lies strictly
/// inside (0, 1) but one query embedding is absent.
std::vector<RankedCandidate> merge_candidates(const VectorStore& store,
                                              const CandidateSet& candidates,
                                              const EmbeddingVector* q_text,
                                              const EmbeddingVector* q_image,
                                              double alpha);

/// Fused score descending, ties by ascending record_id.
void rerank(std::vector<RankedCandidate>& candidates);

/// Full pipeline: embed the query, fan out per modality, merge, re-rank, cut
/// to top_k. Single-modality queries force alpha to the matching endpoint
/// (recorded in warnings). Errors: EmptyInput (no modality at all),
/// StoreEmpty, plus anything the gateway or store throws.
RetrievalResult retrieve(const VectorStore& store, const EmbeddingGateway& gateway,
                         const Query& query, const RetrievalParams& params);

}  // namespace rsrag
