#include "rsrag/retrieval.hpp"

#include <algorithm>
#include <set>

#include "rsrag/error.hpp"

namespace rsrag {

void RetrievalParams::validate() const {
    if (top_k == 0) throw Error(ErrorCode::ConfigInvalid, "top_k must be >= 1");
    if (top_k > tau * 2)
        throw Error(ErrorCode::ConfigInvalid,
                    "top_k cannot exceed 2*tau (the merged candidate bound)");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(ErrorCode::AlphaOutOfRange,
                    "alpha must lie in [0, 1], got " + std::to_string(alpha));
}

double fuse_score(double s_text, double s_image, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(ErrorCode::AlphaOutOfRange,
                    "alpha must lie in [0, 1], got " + std::to_string(alpha));
    return (1.0 - alpha) * s_text + alpha * s_image;
}

CandidateSet generate_candidates(const VectorStore& store, const EmbeddingVector* q_text,
                                 const EmbeddingVector* q_image,
                                 const RetrievalParams& params) {
    CandidateSet out;
    if (q_text)
        out.text_hits = store.search(Modality::Text, q_text->values, params.tau,
                                     params.exact_search, params.ef);
    if (q_image)
        out.image_hits = store.search(Modality::Image, q_image->values, params.tau,
                                      params.exact_search, params.ef);
    return out;
}

std::vector<RankedCandidate> merge_candidates(const VectorStore& store,
                                              const CandidateSet& candidates,
                                              const EmbeddingVector* q_text,
                                              const EmbeddingVector* q_image, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(ErrorCode::AlphaOutOfRange,
                    "alpha must lie in [0, 1], got " + std::to_string(alpha));
    if (alpha > 0.0 && alpha < 1.0 && (!q_text || !q_image))
        throw Error(ErrorCode::MissingModalityEmbedding,
                    "alpha strictly inside (0, 1) needs both query embeddings");

    std::set<std::string> record_ids;
    for (const auto& h : candidates.text_hits) record_ids.insert(h.record_id);
    for (const auto& h : candidates.image_hits) record_ids.insert(h.record_id);

    const VectorCollection& texts = store.collection(Modality::Text);
    const VectorCollection& images = store.collection(Modality::Image);

    std::vector<RankedCandidate> merged;
    merged.reserve(record_ids.size());
    for (const auto& id : record_ids) {
        RankedCandidate c;
        c.record_id = id;
        if (q_text) {
            for (std::size_t i : texts.indices_for_record(id)) {
                const CollectionEntry& e = texts.entries()[i];
                c.supporting_chunks.emplace_back(e.entry_id, dot(q_text->values, e.vector.values));
            }
            std::sort(c.supporting_chunks.begin(), c.supporting_chunks.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) return a.second > b.second;
                          return a.first < b.first;
                      });
            if (!c.supporting_chunks.empty())
                c.text_similarity = c.supporting_chunks.front().second;
        }
        if (q_image)
            c.image_similarity = images.best_similarity(id, q_image->values).value_or(0.0);
        c.fused_score = fuse_score(c.text_similarity, c.image_similarity, alpha);
        merged.push_back(std::move(c));
    }
    return merged;
}

void rerank(std::vector<RankedCandidate>& candidates) {
    std::sort(candidates.begin(), candidates.end(),
              [](const RankedCandidate& a, const RankedCandidate& b) {
                  if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
                  return a.record_id < b.record_id;
              });
}

RetrievalResult retrieve(const VectorStore& store, const EmbeddingGateway& gateway,
                         const Query& query, const RetrievalParams& params) {
    params.validate();

    const bool have_text = !query.text.empty();
    const bool have_image = !query.image_ref.empty();
    if (!have_text && !have_image)
        throw Error(ErrorCode::EmptyInput, "query needs text, an image, or both");
    if (store.collection(Modality::Text).size() == 0 &&
        store.collection(Modality::Image).size() == 0)
        throw Error(ErrorCode::StoreEmpty, "store has no entries");

    RetrievalResult result;
    result.alpha_used = params.alpha;
    if (!have_image) {
        result.alpha_used = 0.0;
        if (params.alpha != 0.0)
            result.warnings.push_back("image missing from query; alpha forced to 0");
    } else if (!have_text) {
        result.alpha_used = 1.0;
        if (params.alpha != 1.0)
            result.warnings.push_back("text missing from query; alpha forced to 1");
    }

    std::optional<EmbeddingVector> q_text, q_image;
    if (have_text) q_text = gateway.embed_text(query.text);
    if (have_image) q_image = gateway.embed_image(query.image_ref);

    CandidateSet candidates = generate_candidates(
        store, q_text ? &*q_text : nullptr, q_image ? &*q_image : nullptr, params);
    auto merged = merge_candidates(store, candidates, q_text ? &*q_text : nullptr,
                                   q_image ? &*q_image : nullptr, result.alpha_used);
    rerank(merged);
    if (merged.size() > params.top_k) merged.resize(params.top_k);
    result.candidates = std::move(merged);
    return result;
}

}  // namespace rsrag
