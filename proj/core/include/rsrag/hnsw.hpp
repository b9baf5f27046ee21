#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rsrag {

struct HnswParams {
    std::size_t m = 16;                // max degree above layer 0 (2*m at layer 0)
    std::size_t ef_construction = 200; // construction beam width
    std::size_t ef_search = 64;        // default query beam width
    double epsilon = 0.08;             // query exploration slack (see search)
    std::uint64_t seed = 42;           // level sampler seed

    bool operator==(const HnswParams&) const = default;
};

struct HnswHit {
    std::uint32_t id = 0;
    double similarity = 0.0;  // cosine on unit vectors (= dot product)
};

/// Small-world graph over unit-norm vectors, searched by cosine similarity.
/// Construction is fully deterministic: the level sampler is seeded and
/// consumes exactly one draw per insert, so replaying the same insertion
/// sequence rebuilds the identical graph.
class HnswIndex {
public:
    HnswIndex() = default;
    HnswIndex(std::size_t dim, HnswParams params);

    /// Appends a vector; ids are assigned consecutively from 0.
    /// Errors: DimensionMismatch.
    std::uint32_t add(std::span<const float> vec);

    /// Top-k by similarity, descending; ties broken by ascending id. The beam
    /// is max(ef, k); ef == 0 uses params().ef_search. The result pool is
    /// capped at the beam width, but expansion keeps following candidates
    /// whose distance is within (1 + epsilon) of the pool's worst — the slack
    /// buys back the recall a bare beam loses on high-dimensional corpora
    /// while leaving the beam parameter's meaning intact. Results are
    /// approximate — callers re-score if exact values matter.
    std::vector<HnswHit> search(std::span<const float> query, std::size_t k,
                                std::size_t ef = 0) const;

    std::size_t size() const { return count_; }
    std::size_t dim() const { return dim_; }
    const HnswParams& params() const { return params_; }

private:
    struct Node {
        std::vector<std::vector<std::uint32_t>> links;  // per layer
    };

    double dist(std::span<const float> q, std::uint32_t id) const;
    std::span<const float> vec(std::uint32_t id) const;
    int sample_level();
    std::vector<std::pair<double, std::uint32_t>> search_layer(
        std::span<const float> q, std::uint32_t entry, std::size_t ef, int layer,
        double eps = 0.0) const;
    std::vector<std::uint32_t> select_diverse(
        const std::vector<std::pair<double, std::uint32_t>>& candidates, std::size_t cap,
        std::uint32_t self) const;
    void connect(std::uint32_t id, int layer,
                 const std::vector<std::pair<double, std::uint32_t>>& candidates);

    std::size_t dim_ = 0;
    HnswParams params_;
    std::vector<float> data_;
    std::vector<Node> nodes_;
    std::size_t count_ = 0;
    std::uint32_t entry_point_ = 0;
    int max_level_ = -1;
    std::uint64_t rng_state_ = 0;
    double level_scale_ = 0.0;
};

}  // namespace rsrag
