#include "rsrag/ingest.hpp"

#include "rsrag/context.hpp"
#include "rsrag/error.hpp"

namespace rsrag {

using nlohmann::json;

IngestResult build_store(const Dataset& dataset, const PipelineConfig& config,
                         const EmbeddingGateway& gateway) {
    HnswParams ann;
    ann.seed = config.seed;
    IngestResult result{VectorStore(config.embedder.dim, ann), {}};

    for (const KnowledgeRecord& record : dataset.records) {
        ValidationReport report = validate_record(record);
        if (!report.ok()) {
            const auto& v = report.violations.front();
            throw Error(ErrorCode::SchemaViolation,
                        "record '" + record.record_id + "': " + v.field + ": " + v.message);
        }

        KnowledgeDocument doc = render_knowledge_document(record);
        if (doc.empty()) {
            result.stats.warnings.push_back("record '" + record.record_id +
                                            "' renders empty; skipped");
            continue;
        }

        std::vector<TextChunk> chunks = chunk_document(doc, config.chunk_budget);
        std::vector<std::string> texts;
        texts.reserve(chunks.size());
        for (const auto& chunk : chunks) texts.push_back(chunk.text);
        std::vector<EmbeddingVector> vectors = gateway.embed_texts(texts);

        for (std::size_t i = 0; i < chunks.size(); ++i) {
            CollectionEntry entry;
            entry.entry_id = record.record_id + "#t" + std::to_string(i);
            entry.record_id = record.record_id;
            entry.vector = std::move(vectors[i]);
            entry.payload = {{"text", chunks[i].text},
                             {"fields", chunks[i].field_names},
                             {"chunk_index", i}};
            result.store.upsert(Modality::Text, std::move(entry));
            ++result.stats.text_entries;
        }

        // Records without an image file still get an image-side vector keyed
        // by a stable reference so cross-modal lookups never dangle.
        const std::string& image_ref =
            record.image_ref.empty() ? record.record_id : record.image_ref;
        CollectionEntry image;
        image.entry_id = record.record_id + "#img";
        image.record_id = record.record_id;
        image.vector = gateway.embed_image(image_ref);
        image.payload = {{"image_ref", record.image_ref}, {"category", record.category}};
        result.store.upsert(Modality::Image, std::move(image));
        ++result.stats.image_entries;
        ++result.stats.records;
    }

    result.store.verify_cross_links();
    result.store.build_ann();
    return result;
}

}  // namespace rsrag
