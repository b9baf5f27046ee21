#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rsrag/config.hpp"
#include "rsrag/dataset.hpp"
#include "rsrag/generation.hpp"
#include "rsrag/ingest.hpp"
#include "rsrag/metrics.hpp"
#include "rsrag/retrieval.hpp"

namespace rsrag {

struct StageTimings {
    double retrieve_ms = 0.0;
    double fuse_ms = 0.0;
    double generate_ms = 0.0;
    double score_ms = 0.0;
};

/// One query through the full chain: retrieve -> fuse -> prompt -> generate.
/// `task` supplies the instruction/header/alpha preset for any config fields
/// left empty (alpha is taken from the config verbatim).
struct AnswerResult {
    std::string text;
    Prompt prompt;
    RetrievalResult retrieval;
    StageTimings timings;
};

AnswerResult answer_query(const VectorStore& store, const EmbeddingGateway& embedder,
                          const GenerationGateway& generator, const Query& query, Task task,
                          const PipelineConfig& config,
                          const FusionClient* fusion = nullptr);

struct ExampleOutcome {
    std::string example_id;
    std::string prediction;               // empty when failed
    std::vector<std::string> retrieved;   // record ids, rank order
    std::vector<double> fused_scores;
    bool failed = false;
    std::string error;
};

struct TaskReport {
    Task task = Task::Captioning;
    PipelineConfig config;
    MetricReport metrics;                 // text metrics, computed for every task
    AccuracyReport accuracy;              // classification only
    bool has_accuracy = false;
    std::vector<ExampleOutcome> examples; // sorted by example_id
    std::vector<std::string> warnings;
    StageTimings timings;                 // shown in report.txt, never report.json
};

/// Evaluates every test-split example of `task` once; per-example failures
/// are flagged and score zero, never aborting the run.
/// Errors: ConfigInvalid, AlphaOutOfRange, StoreEmpty.
TaskReport run_task(Task task, const Dataset& dataset, const VectorStore& store,
                    const PipelineConfig& config, const EmbeddingGateway& embedder,
                    const GenerationGateway& generator,
                    const FusionClient* fusion = nullptr);

/// report.json payload: config snapshot + hash, metrics, per-example
/// provenance. Deliberately excludes wall-clock data so equal runs serialize
/// byte-identically. Round-trips through task_report_from_json.
nlohmann::json task_report_to_json(const TaskReport& report);
TaskReport task_report_from_json(const nlohmann::json& j);

/// Human-readable table: 3-decimal metric columns, timings, warnings.
std::string render_task_report_text(const TaskReport& report);

/// Writes <dir>/report.json and <dir>/report.txt. Errors: IoFailure.
void write_task_report(const TaskReport& report, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Ablation sweeps
// ---------------------------------------------------------------------------

struct SweepGrid {
    std::vector<std::size_t> k_values;
    std::vector<double> alpha_values;
};

struct SweepCellResult {
    std::size_t top_k = 0;
    double alpha = 0.0;
    TaskReport report;
};

struct SweepReport {
    Task task = Task::Captioning;
    SweepGrid grid;
    std::string grid_hash;
    std::string base_config_hash;
    std::vector<SweepCellResult> cells;  // K-major, grid order
};

/// One run_task per grid cell (K-major order). Cells are independent: a cell
/// equals the same configuration run alone. Errors: ConfigInvalid (empty
/// grid), plus run_task errors.
SweepReport sweep(Task task, const Dataset& dataset, const VectorStore& store,
                  const PipelineConfig& base, const SweepGrid& grid,
                  const EmbeddingGateway& embedder, const GenerationGateway& generator,
                  const FusionClient* fusion = nullptr);

/// Summary table: one row per cell, one column per metric, best value per
/// column starred. Compared against golden files in the tests.
std::string render_sweep_summary(const SweepReport& report);

nlohmann::json sweep_report_to_json(const SweepReport& report);

/// Writes summary + per-cell reports under
/// <out_root>/sweeps/<task>/<grid_hash>/ and returns that directory.
std::filesystem::path write_sweep_report(const SweepReport& report,
                                         const std::filesystem::path& out_root);

}  // namespace rsrag
