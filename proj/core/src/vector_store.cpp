#include "rsrag/vector_store.hpp"

#include <algorithm>
#include <bit>
#include <fstream>

#include "rsrag/error.hpp"

namespace rsrag {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

using nlohmann::json;

std::string_view modality_label(Modality m) {
    return m == Modality::Text ? "text" : "image";
}

Modality modality_from_label(std::string_view label) {
    if (label == "text") return Modality::Text;
    if (label == "image") return Modality::Image;
    throw Error(ErrorCode::SchemaViolation, "unknown modality: " + std::string(label));
}

bool hit_less(const SearchHit& a, const SearchHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.record_id != b.record_id) return a.record_id < b.record_id;
    return a.entry_id < b.entry_id;
}

// ---------------------------------------------------------------------------
// VectorCollection
// ---------------------------------------------------------------------------

VectorCollection::VectorCollection(std::string name, std::size_t dim, HnswParams ann_params)
    : name_(std::move(name)), dim_(dim), ann_params_(ann_params) {
    if (dim_ == 0) throw Error(ErrorCode::ConfigInvalid, "collection dim must be positive");
}

void VectorCollection::upsert(CollectionEntry entry) {
    if (entry.entry_id.empty() || entry.record_id.empty())
        throw Error(ErrorCode::SchemaViolation, "entry requires entry_id and record_id");
    if (entry.vector.dim() != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    name_ + ": vector dim " + std::to_string(entry.vector.dim()) +
                        " vs collection dim " + std::to_string(dim_));

    auto it = by_id_.find(entry.entry_id);
    if (it != by_id_.end()) {
        CollectionEntry& slot = entries_[it->second];
        if (slot.record_id != entry.record_id) {
            auto& old = by_record_[slot.record_id];
            old.erase(std::remove(old.begin(), old.end(), it->second), old.end());
            by_record_[entry.record_id].push_back(it->second);
        }
        slot = std::move(entry);
        if (ann_built_) ann_stale_ = true;
        return;
    }
    by_id_.emplace(entry.entry_id, entries_.size());
    by_record_[entry.record_id].push_back(entries_.size());
    entries_.push_back(std::move(entry));
    if (ann_built_) ann_stale_ = true;
}

const CollectionEntry* VectorCollection::find(std::string_view entry_id) const {
    auto it = by_id_.find(std::string(entry_id));
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

const std::vector<std::size_t>& VectorCollection::indices_for_record(
    const std::string& record_id) const {
    static const std::vector<std::size_t> empty;
    auto it = by_record_.find(record_id);
    return it == by_record_.end() ? empty : it->second;
}

std::optional<double> VectorCollection::best_similarity(const std::string& record_id,
                                                        std::span<const float> query) const {
    const auto& idx = indices_for_record(record_id);
    if (idx.empty()) return std::nullopt;
    double best = -2.0;
    for (std::size_t i : idx) best = std::max(best, dot(query, entries_[i].vector.values));
    return best;
}

RankedList VectorCollection::search_exact(std::span<const float> query, std::size_t k) const {
    if (query.size() != dim_)
        throw Error(ErrorCode::DimensionMismatch, name_ + ": bad query dim");
    RankedList hits;
    hits.reserve(entries_.size());
    for (const auto& e : entries_)
        hits.push_back({e.entry_id, e.record_id, dot(query, e.vector.values)});
    std::sort(hits.begin(), hits.end(), hit_less);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

RankedList VectorCollection::search_ann(std::span<const float> query, std::size_t k,
                                        std::size_t ef) const {
    if (!ann_built_)
        throw Error(ErrorCode::IndexNotBuilt, name_ + ": ANN index has not been built");
    if (ann_stale_)
        throw Error(ErrorCode::IndexNotBuilt,
                    name_ + ": ANN index is stale after upsert; rebuild first");
    if (query.size() != dim_)
        throw Error(ErrorCode::DimensionMismatch, name_ + ": bad query dim");

    auto approx = ann_.search(query, k, ef);
    RankedList hits;
    hits.reserve(approx.size());
    std::vector<bool> seen(entries_.size(), false);
    for (const auto& h : approx) {
        const CollectionEntry& e = entries_[h.id];
        seen[h.id] = true;
        hits.push_back({e.entry_id, e.record_id, dot(query, e.vector.values)});
    }
    // Graph underfill (possible on tiny or adversarial inputs) falls back to
    // scanning the remainder so the contract "k hits when k <= size" holds.
    if (hits.size() < std::min(k, entries_.size())) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (seen[i]) continue;
            const CollectionEntry& e = entries_[i];
            hits.push_back({e.entry_id, e.record_id, dot(query, e.vector.values)});
        }
    }
    std::sort(hits.begin(), hits.end(), hit_less);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

void VectorCollection::build_ann() {
    ann_ = HnswIndex(dim_, ann_params_);
    for (const auto& e : entries_) ann_.add(e.vector.values);
    ann_built_ = true;
    ann_stale_ = false;
}

// ---------------------------------------------------------------------------
// VectorStore
// ---------------------------------------------------------------------------

VectorStore::VectorStore(std::size_t dim, HnswParams ann_params)
    : dim_(dim), text_("text", dim, ann_params), image_("image", dim, ann_params) {}

VectorCollection& VectorStore::collection(Modality m) {
    return m == Modality::Text ? text_ : image_;
}

const VectorCollection& VectorStore::collection(Modality m) const {
    return m == Modality::Text ? text_ : image_;
}

void VectorStore::upsert(Modality m, CollectionEntry entry) {
    collection(m).upsert(std::move(entry));
}

RankedList VectorStore::search(Modality m, std::span<const float> query, std::size_t k,
                               bool exact, std::size_t ef) const {
    const VectorCollection& c = collection(m);
    return exact ? c.search_exact(query, k) : c.search_ann(query, k, ef);
}

void VectorStore::build_ann() {
    text_.build_ann();
    image_.build_ann();
}

bool VectorStore::ann_ready() const { return text_.ann_ready() && image_.ann_ready(); }

void VectorStore::verify_cross_links() const {
    for (const auto& e : text_.entries())
        if (image_.indices_for_record(e.record_id).empty())
            throw Error(ErrorCode::DanglingReference,
                        "record '" + e.record_id + "' has text entries but no image entry");
    for (const auto& e : image_.entries())
        if (text_.indices_for_record(e.record_id).empty())
            throw Error(ErrorCode::DanglingReference,
                        "record '" + e.record_id + "' has an image entry but no text entries");
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

namespace {

void write_collection(const VectorCollection& c, const std::filesystem::path& dir) {
    {
        std::ofstream vec(dir / (c.name() + ".vec"), std::ios::binary);
        if (!vec) throw Error(ErrorCode::IoFailure, "cannot write " + c.name() + ".vec");
        for (const auto& e : c.entries())
            vec.write(reinterpret_cast<const char*>(e.vector.values.data()),
                      static_cast<std::streamsize>(e.vector.values.size() * sizeof(float)));
    }
    {
        std::ofstream pay(dir / (c.name() + ".payload.jsonl"), std::ios::binary);
        if (!pay) throw Error(ErrorCode::IoFailure, "cannot write " + c.name() + ".payload.jsonl");
        for (const auto& e : c.entries()) {
            json row = {{"entry_id", e.entry_id},
                        {"record_id", e.record_id},
                        {"payload", e.payload}};
            pay << row.dump() << '\n';
        }
    }
}

void load_collection(VectorStore& store, Modality m, const json& meta,
                     const std::filesystem::path& dir, std::size_t dim) {
    const std::string name(modality_label(m));
    const auto count = meta.at("count").get<std::size_t>();

    std::ifstream vec(dir / (name + ".vec"), std::ios::binary);
    if (!vec) throw Error(ErrorCode::MissingFile, "missing " + name + ".vec");
    vec.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(vec.tellg());
    if (bytes != count * dim * sizeof(float))
        throw Error(ErrorCode::CorruptSnapshot,
                    name + ".vec has " + std::to_string(bytes) + " bytes, expected " +
                        std::to_string(count * dim * sizeof(float)));
    vec.seekg(0);

    std::ifstream pay(dir / (name + ".payload.jsonl"));
    if (!pay) throw Error(ErrorCode::MissingFile, "missing " + name + ".payload.jsonl");

    std::string line;
    std::size_t rows = 0;
    while (std::getline(pay, line)) {
        if (line.empty()) continue;
        ++rows;
        if (rows > count)
            throw Error(ErrorCode::CorruptSnapshot, name + ".payload.jsonl has extra rows");
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.contains("entry_id") || !row.contains("record_id"))
            throw Error(ErrorCode::CorruptSnapshot,
                        name + ".payload.jsonl row " + std::to_string(rows) + " is malformed");
        CollectionEntry e;
        e.entry_id = row.at("entry_id").get<std::string>();
        e.record_id = row.at("record_id").get<std::string>();
        e.payload = row.value("payload", json());
        e.vector.values.resize(dim);
        vec.read(reinterpret_cast<char*>(e.vector.values.data()),
                 static_cast<std::streamsize>(dim * sizeof(float)));
        if (!vec)
            throw Error(ErrorCode::CorruptSnapshot, name + ".vec truncated at row " +
                                                        std::to_string(rows));
        store.upsert(m, std::move(e));
    }
    if (rows != count)
        throw Error(ErrorCode::CorruptSnapshot,
                    name + ".payload.jsonl has " + std::to_string(rows) + " rows, expected " +
                        std::to_string(count));
}

}  // namespace

void VectorStore::save_snapshot(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    json manifest;
    manifest["format_version"] = 1;
    manifest["dim"] = dim_;
    manifest["collections"] = {
        {"text", {{"count", text_.size()}}},
        {"image", {{"count", image_.size()}}},
    };
    const HnswParams& p = text_.ann_params();
    manifest["ann"] = {{"built", ann_ready()},
                       {"m", p.m},
                       {"ef_construction", p.ef_construction},
                       {"ef_search", p.ef_search},
                       {"epsilon", p.epsilon},
                       {"seed", p.seed}};

    std::ofstream mf(dir / "manifest.json", std::ios::binary);
    if (!mf) throw Error(ErrorCode::IoFailure, "cannot write manifest.json");
    mf << manifest.dump(2) << '\n';

    write_collection(text_, dir);
    write_collection(image_, dir);
}

VectorStore VectorStore::load_snapshot(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw Error(ErrorCode::MissingFile, "missing manifest.json in " + dir.string());
    json manifest = json::parse(mf, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object())
        throw Error(ErrorCode::CorruptSnapshot, "manifest.json is not valid JSON");
    if (manifest.value("format_version", 0) != 1)
        throw Error(ErrorCode::CorruptSnapshot, "unsupported snapshot format version");
    if (!manifest.contains("dim") || !manifest["dim"].is_number_unsigned() ||
        manifest["dim"] == 0)
        throw Error(ErrorCode::CorruptSnapshot, "manifest.json: bad dim");
    const auto dim = manifest["dim"].get<std::size_t>();

    HnswParams params;
    bool ann_built = false;
    if (manifest.contains("ann")) {
        const json& ann = manifest["ann"];
        ann_built = ann.value("built", false);
        params.m = ann.value("m", params.m);
        params.ef_construction = ann.value("ef_construction", params.ef_construction);
        params.ef_search = ann.value("ef_search", params.ef_search);
        params.epsilon = ann.value("epsilon", params.epsilon);
        params.seed = ann.value("seed", params.seed);
    }

    VectorStore store(dim, params);
    if (!manifest.contains("collections") || !manifest["collections"].contains("text") ||
        !manifest["collections"].contains("image"))
        throw Error(ErrorCode::CorruptSnapshot, "manifest.json: missing collections");
    load_collection(store, Modality::Text, manifest["collections"]["text"], dir, dim);
    load_collection(store, Modality::Image, manifest["collections"]["image"], dir, dim);
    if (ann_built) store.build_ann();
    return store;
}

}  // namespace rsrag
