#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

#include "rsrag/config.hpp"
#include "rsrag/vector_store.hpp"

namespace rsrag {

/// Read-only retrieval/answer service over a loaded snapshot.
///
///   POST /v1/retrieve   ranked candidates with chunk provenance
///   POST /v1/answer     full chain: retrieve -> fuse -> prompt -> generate
///   GET  /v1/health     liveness + snapshot state
///   GET  /v1/config     active config snapshot + hash
///
/// Every response carries the config hash and snapshot id. Snapshot
/// replacement is an atomic pointer swap: in-flight requests finish on the
/// snapshot they started with. Mutation happens only through CLI ingest.
class Service {
public:
    explicit Service(PipelineConfig config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Loads (or replaces) the served snapshot. Errors: MissingFile,
    /// CorruptSnapshot.
    void load_snapshot(const std::filesystem::path& dir);

    bool has_snapshot() const;
    std::string snapshot_id() const;  // empty when none loaded

    /// Binds and serves until stop(); returns the bound port immediately via
    /// start() for tests. run() blocks. Errors: IoFailure (bind failure).
    int start(const std::string& host, int port);  // 0 picks an ephemeral port
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rsrag
