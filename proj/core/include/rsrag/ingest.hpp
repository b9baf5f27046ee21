#pragma once

#include <string>
#include <vector>

#include "rsrag/config.hpp"
#include "rsrag/dataset.hpp"
#include "rsrag/vector_store.hpp"

namespace rsrag {

struct IngestStats {
    std::size_t records = 0;        // records indexed
    std::size_t text_entries = 0;   // total chunks
    std::size_t image_entries = 0;
    std::vector<std::string> warnings;
};

struct IngestResult {
    VectorStore store;
    IngestStats stats;
};

/// Renders every record into a document, chunks it, embeds chunks and image,
/// and fills both collections (text entry ids "<record_id>#t<i>", image
/// "<record_id>#img"). The ANN index is built and cross-links verified.
/// Records rendering to an empty document are skipped with a warning.
/// Errors: SchemaViolation (invalid record, with the validation detail),
/// plus anything the gateway throws.
IngestResult build_store(const Dataset& dataset, const PipelineConfig& config,
                         const EmbeddingGateway& gateway);

}  // namespace rsrag
