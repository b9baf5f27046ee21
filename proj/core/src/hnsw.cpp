#include "rsrag/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "rsrag/error.hpp"
#include "rng.hpp"

namespace rsrag {

namespace {

// Orders (distance, id) pairs; the id component makes every comparison a
// total order so heap contents never depend on insertion happenstance.
using ScoredId = std::pair<double, std::uint32_t>;

struct Closer {
    bool operator()(const ScoredId& a, const ScoredId& b) const { return a > b; }
};
struct Farther {
    bool operator()(const ScoredId& a, const ScoredId& b) const { return a < b; }
};

}  // namespace

HnswIndex::HnswIndex(std::size_t dim, HnswParams params)
    : dim_(dim), params_(params), rng_state_(params.seed) {
    if (dim_ == 0) throw Error(ErrorCode::ConfigInvalid, "index dim must be positive");
    if (params_.m < 2) throw Error(ErrorCode::ConfigInvalid, "index degree must be >= 2");
    if (params_.epsilon < 0.0)
        throw Error(ErrorCode::ConfigInvalid, "index epsilon must be non-negative");
    level_scale_ = 1.0 / std::log(static_cast<double>(params_.m));
}

std::span<const float> HnswIndex::vec(std::uint32_t id) const {
    return {data_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

double HnswIndex::dist(std::span<const float> q, std::uint32_t id) const {
    std::span<const float> v = vec(id);
    double dot = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
        dot += static_cast<double>(q[i]) * static_cast<double>(v[i]);
    return 1.0 - dot;
}

int HnswIndex::sample_level() {
    detail::SplitMix64 rng(rng_state_);
    double u = rng.next_unit();
    rng_state_ = rng.state;
    // u in [0,1); 1-u in (0,1] keeps the log finite.
    return static_cast<int>(std::floor(-std::log(1.0 - u) * level_scale_));
}

// Best-first beam search over one layer. `best` is the result pool, capped at
// ef. With eps == 0 expansion stops as soon as the nearest unexpanded
// candidate is farther than the pool's worst member (the classic rule); a
// positive eps keeps following candidates within (1 + eps) of that bound,
// which recovers neighbours the bare beam walks past.
std::vector<ScoredId> HnswIndex::search_layer(std::span<const float> q, std::uint32_t entry,
                                              std::size_t ef, int layer, double eps) const {
    std::priority_queue<ScoredId, std::vector<ScoredId>, Closer> candidates;
    std::priority_queue<ScoredId, std::vector<ScoredId>, Farther> best;
    std::vector<bool> visited(count_, false);

    double d0 = dist(q, entry);
    candidates.emplace(d0, entry);
    best.emplace(d0, entry);
    visited[entry] = true;

    while (!candidates.empty()) {
        auto [d, id] = candidates.top();
        if (d > best.top().first * (1.0 + eps) && best.size() >= ef) break;
        candidates.pop();
        for (std::uint32_t nb : nodes_[id].links[static_cast<std::size_t>(layer)]) {
            if (visited[nb]) continue;
            visited[nb] = true;
            double dn = dist(q, nb);
            bool admit = best.size() < ef || dn < best.top().first ||
                         (dn == best.top().first && nb < best.top().second);
            if (admit) {
                best.emplace(dn, nb);
                if (best.size() > ef) best.pop();
            }
            if (admit || (eps > 0.0 && dn <= best.top().first * (1.0 + eps)))
                candidates.emplace(dn, nb);
        }
    }

    std::vector<ScoredId> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Diversity-pruned selection: walking candidates by ascending distance, a
// candidate joins the link list only when it is closer to the base point than
// to every neighbour already chosen. Links then spread across directions
// instead of piling into one cluster, which is what keeps beam-search recall
// high as the graph grows.
std::vector<std::uint32_t> HnswIndex::select_diverse(const std::vector<ScoredId>& candidates,
                                                     std::size_t cap,
                                                     std::uint32_t self) const {
    std::vector<std::uint32_t> chosen;
    chosen.reserve(cap);
    for (const auto& [d, nb] : candidates) {
        if (chosen.size() >= cap) break;
        if (nb == self) continue;
        bool diverse = true;
        for (std::uint32_t s : chosen) {
            if (dist(vec(nb), s) < d) {
                diverse = false;
                break;
            }
        }
        if (diverse) chosen.push_back(nb);
    }
    return chosen;
}

void HnswIndex::connect(std::uint32_t id, int layer,
                        const std::vector<ScoredId>& candidates) {
    const std::size_t cap = layer == 0 ? params_.m * 2 : params_.m;
    auto& links = nodes_[id].links[static_cast<std::size_t>(layer)];
    links = select_diverse(candidates, cap, id);
    for (std::uint32_t nb : links) {
        auto& back = nodes_[nb].links[static_cast<std::size_t>(layer)];
        back.push_back(id);
        if (back.size() > cap) {
            std::vector<ScoredId> scored;
            scored.reserve(back.size());
            std::span<const float> vn = vec(nb);
            for (std::uint32_t other : back) scored.emplace_back(dist(vn, other), other);
            std::sort(scored.begin(), scored.end());
            back = select_diverse(scored, cap, nb);
        }
    }
}

std::uint32_t HnswIndex::add(std::span<const float> v) {
    if (dim_ == 0) throw Error(ErrorCode::ConfigInvalid, "index is default-constructed");
    if (v.size() != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    "vector dim " + std::to_string(v.size()) + " vs index dim " +
                        std::to_string(dim_));

    const auto id = static_cast<std::uint32_t>(count_);
    data_.insert(data_.end(), v.begin(), v.end());
    int level = sample_level();
    nodes_.push_back(Node{std::vector<std::vector<std::uint32_t>>(
        static_cast<std::size_t>(level) + 1)});
    ++count_;

    if (id == 0) {
        entry_point_ = 0;
        max_level_ = level;
        return id;
    }

    std::span<const float> q = vec(id);
    std::uint32_t entry = entry_point_;
    for (int layer = max_level_; layer > level; --layer) {
        bool improved = true;
        double d = dist(q, entry);
        while (improved) {
            improved = false;
            for (std::uint32_t nb : nodes_[entry].links[static_cast<std::size_t>(layer)]) {
                double dn = dist(q, nb);
                if (dn < d || (dn == d && nb < entry)) {
                    d = dn;
                    entry = nb;
                    improved = true;
                }
            }
        }
    }

    for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
        auto found = search_layer(q, entry, params_.ef_construction, layer);
        connect(id, layer, found);
        entry = found.front().second;
    }

    if (level > max_level_) {
        max_level_ = level;
        entry_point_ = id;
    }
    return id;
}

std::vector<HnswHit> HnswIndex::search(std::span<const float> query, std::size_t k,
                                       std::size_t ef) const {
    if (count_ == 0) return {};
    if (query.size() != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    "query dim " + std::to_string(query.size()) + " vs index dim " +
                        std::to_string(dim_));
    if (ef == 0) ef = params_.ef_search;
    ef = std::max(ef, k);

    std::uint32_t entry = entry_point_;
    double d = dist(query, entry);
    for (int layer = max_level_; layer > 0; --layer) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t nb : nodes_[entry].links[static_cast<std::size_t>(layer)]) {
                double dn = dist(query, nb);
                if (dn < d || (dn == d && nb < entry)) {
                    d = dn;
                    entry = nb;
                    improved = true;
                }
            }
        }
    }

    auto found = search_layer(query, entry, ef, 0, params_.epsilon);
    if (found.size() > k) found.resize(k);
    std::vector<HnswHit> out;
    out.reserve(found.size());
    for (const auto& [dd, id] : found) out.push_back({id, 1.0 - dd});
    return out;
}

}  // namespace rsrag
