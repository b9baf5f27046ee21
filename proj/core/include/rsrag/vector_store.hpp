#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rsrag/embedding.hpp"
#include "rsrag/hnsw.hpp"

namespace rsrag {

enum class Modality { Text, Image };

std::string_view modality_label(Modality m);
Modality modality_from_label(std::string_view label);

struct CollectionEntry {
    std::string entry_id;
    std::string record_id;
    EmbeddingVector vector;
    nlohmann::json payload;  // chunk text, covered fields, image ref, ...
};

struct SearchHit {
    std::string entry_id;
    std::string record_id;
    double similarity = 0.0;
};

/// Descending similarity; ties broken by record_id then entry_id, so every
/// ranking is a total order.
bool hit_less(const SearchHit& a, const SearchHit& b);

using RankedList = std::vector<SearchHit>;

/// One modality's entries, searchable exactly (full scan, double-accumulated
/// dot products) or approximately (graph index with exact re-scoring).
class VectorCollection {
public:
    VectorCollection(std::string name, std::size_t dim, HnswParams ann_params = {});

    /// Insert, or replace in place when entry_id already exists (position and
    /// snapshot order are preserved). Replacement marks the graph index stale.
    /// Errors: DimensionMismatch, SchemaViolation (empty ids).
    void upsert(CollectionEntry entry);

    const CollectionEntry* find(std::string_view entry_id) const;
    const std::vector<std::size_t>& indices_for_record(const std::string& record_id) const;

    /// Best cosine similarity between `query` and any entry of the record.
    std::optional<double> best_similarity(const std::string& record_id,
                                          std::span<const float> query) const;

    RankedList search_exact(std::span<const float> query, std::size_t k) const;

    /// Beam search over the graph, exact re-scoring of the returned
    /// candidates, and an exact-scan top-up if the graph returns fewer than
    /// min(k, size()) hits. Errors: IndexNotBuilt (never built, or stale).
    RankedList search_ann(std::span<const float> query, std::size_t k,
                          std::size_t ef = 0) const;

    void build_ann();
    bool ann_ready() const { return ann_built_ && !ann_stale_; }

    const std::string& name() const { return name_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<CollectionEntry>& entries() const { return entries_; }
    const HnswParams& ann_params() const { return ann_params_; }

private:
    std::string name_;
    std::size_t dim_;
    HnswParams ann_params_;
    std::vector<CollectionEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_record_;
    HnswIndex ann_;
    bool ann_built_ = false;
    bool ann_stale_ = false;
};

/// Paired text/image collections over one embedding space, cross-linked by
/// record_id, persistable as a snapshot directory:
///
///   manifest.json            counts, dim, index parameters
///   {text,image}.vec         float32 little-endian rows, insertion order
///   {text,image}.payload.jsonl
///
/// Writing the same logical content always produces byte-identical files.
class VectorStore {
public:
    explicit VectorStore(std::size_t dim, HnswParams ann_params = {});

    VectorCollection& collection(Modality m);
    const VectorCollection& collection(Modality m) const;

    void upsert(Modality m, CollectionEntry entry);
    RankedList search(Modality m, std::span<const float> query, std::size_t k,
                      bool exact, std::size_t ef = 0) const;

    void build_ann();
    bool ann_ready() const;

    /// Every record_id must appear in both collections.
    /// Errors: DanglingReference.
    void verify_cross_links() const;

    void save_snapshot(const std::filesystem::path& dir) const;

    /// Errors: MissingFile, CorruptSnapshot. Rebuilds the graph index when the
    /// manifest says it was built (replay is deterministic, so the rebuilt
    /// index matches the original).
    static VectorStore load_snapshot(const std::filesystem::path& dir);

    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_;
    VectorCollection text_;
    VectorCollection image_;
};

}  // namespace rsrag
