// rsrag — ingest, index, query, benchmark and serve a cross-modal
// knowledge store. Every subcommand shares the same config vocabulary;
// provider endpoints come from flags or the RSRAG_* environment variables.

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsrag/config.hpp"
#include "rsrag/dataset.hpp"
#include "rsrag/error.hpp"
#include "rsrag/ingest.hpp"
#include "rsrag/runner.hpp"
#include "rsrag/service.hpp"

using nlohmann::json;

namespace {

struct CommonOpts {
    rsrag::PipelineConfig config = rsrag::PipelineConfig::from_env();
    bool alpha_given = false;
    bool generator_given = false;
};

void add_pipeline_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--tau", opts.config.tau, "per-modality candidate depth");
    cmd->add_option("--top-k,-k", opts.config.top_k, "final candidates kept");
    cmd->add_option("--alpha", opts.config.alpha, "image weight in [0,1]")
        ->each([&opts](const std::string&) { opts.alpha_given = true; });
    cmd->add_flag("--exact", opts.config.exact_search, "full-scan search (skip ANN)");
    cmd->add_option("--ef", opts.config.ef, "ANN beam width override");
    cmd->add_option("--chunk-budget", opts.config.chunk_budget, "tokens per chunk");
    cmd->add_option("--dim", opts.config.embedder.dim, "embedding dimension");
    cmd->add_option("--seed", opts.config.seed, "deterministic seed");
    cmd->add_option("--max-tokens", opts.config.max_tokens, "generation token limit");
    cmd->add_option("--fusion-max-tokens", opts.config.fusion_max_tokens,
                    "fused context token cap");
    cmd->add_option("--instruction", opts.config.instruction, "prompt instruction override");
    cmd->add_option("--knowledge-header", opts.config.knowledge_header,
                    "knowledge header override");
    cmd->add_option("--fusion", [&opts](const std::vector<std::string>& vals) {
            opts.config.fusion_mode = rsrag::fusion_mode_from_label(vals.front());
            return true;
        }, "fusion mode: deterministic|model");
    cmd->add_option("--generator", [&opts](const std::vector<std::string>& vals) {
            opts.config.generator.kind = rsrag::generator_kind_from_label(vals.front());
            opts.generator_given = true;
            return true;
        }, "generator: echo|label|remote");
}

// When --alpha was not given, tasks fall back to their preset weight.
void resolve_alpha(CommonOpts& opts, rsrag::Task task) {
    if (!opts.alpha_given) opts.config.alpha = rsrag::preset_for_task(task).alpha;
}

int exit_code_for(const rsrag::Error& e) {
    if (rsrag::is_input_error(e.code())) return 2;
    if (rsrag::is_provider_error(e.code())) return 3;
    return 4;
}

// One machine-parsable line on stderr for scripted callers.
void report_error(const rsrag::Error& e) {
    std::cerr << "error code=" << rsrag::error_code_name(e.code()) << " msg=" << json(e.what())
              << "\n";
}

rsrag::Query make_query(const std::string& text, const std::string& image) {
    return rsrag::Query{text, image};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-modal retrieval-augmented generation toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;

    std::string records_path, tasks_path, snapshot_dir, out_dir = ".";
    std::string query_text, query_image, task_name = "vqa_wk";
    std::string host = "0.0.0.0";
    int port = 8080;
    std::vector<std::size_t> k_values{1, 3, 5};
    std::vector<double> alpha_values{0.3, 0.5, 0.7, 0.9};

    if (const char* dir = std::getenv("RSRAG_SNAPSHOT_DIR"); dir && *dir) snapshot_dir = dir;
    if (const char* p = std::getenv("RSRAG_PORT"); p && *p) port = std::atoi(p);

    auto* ingest = app.add_subcommand("ingest", "build a snapshot from dataset files");
    ingest->add_option("--records", records_path, "records.jsonl path")->required();
    ingest->add_option("--tasks", tasks_path, "tasks.jsonl path")->required();
    ingest->add_option("--out", snapshot_dir, "snapshot output directory")->required();
    add_pipeline_flags(ingest, opts);

    auto* index = app.add_subcommand("index", "rebuild the ANN index of a snapshot");
    index->add_option("--snapshot", snapshot_dir, "snapshot directory")->required();

    auto* retrieve_cmd = app.add_subcommand("retrieve", "rank records for a query");
    retrieve_cmd->add_option("--snapshot", snapshot_dir, "snapshot directory")->required();
    retrieve_cmd->add_option("--text", query_text, "text query");
    retrieve_cmd->add_option("--image", query_image, "image path or URI");
    add_pipeline_flags(retrieve_cmd, opts);

    auto* answer_cmd = app.add_subcommand("answer", "full retrieve->fuse->generate chain");
    answer_cmd->add_option("--snapshot", snapshot_dir, "snapshot directory")->required();
    answer_cmd->add_option("--text", query_text, "text query");
    answer_cmd->add_option("--image", query_image, "image path or URI");
    answer_cmd->add_option("--task", task_name, "task preset");
    add_pipeline_flags(answer_cmd, opts);

    auto* bench = app.add_subcommand("bench", "evaluate one task over the test split");
    bench->add_option("--records", records_path, "records.jsonl path")->required();
    bench->add_option("--tasks", tasks_path, "tasks.jsonl path")->required();
    bench->add_option("--task", task_name, "task to evaluate")->required();
    bench->add_option("--snapshot", snapshot_dir, "reuse an existing snapshot");
    bench->add_option("--out", out_dir, "report output directory");
    add_pipeline_flags(bench, opts);

    auto* sweep_cmd = app.add_subcommand("sweep", "K x alpha ablation grid");
    sweep_cmd->add_option("--records", records_path, "records.jsonl path")->required();
    sweep_cmd->add_option("--tasks", tasks_path, "tasks.jsonl path")->required();
    sweep_cmd->add_option("--task", task_name, "task to evaluate")->required();
    sweep_cmd->add_option("--snapshot", snapshot_dir, "reuse an existing snapshot");
    sweep_cmd->add_option("--out", out_dir, "report output root");
    sweep_cmd->add_option("--k-values", k_values, "top-K grid values");
    sweep_cmd->add_option("--alpha-values", alpha_values, "alpha grid values");
    add_pipeline_flags(sweep_cmd, opts);

    auto* serve = app.add_subcommand("serve", "HTTP retrieval/answer service");
    serve->add_option("--snapshot", snapshot_dir, "snapshot directory");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "bind port");
    add_pipeline_flags(serve, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            rsrag::Dataset dataset = rsrag::load_dataset(records_path, tasks_path);
            rsrag::EmbeddingGateway gateway(opts.config.embedder);
            rsrag::IngestResult result = rsrag::build_store(dataset, opts.config, gateway);
            result.store.save_snapshot(snapshot_dir);
            json out = {{"snapshot", snapshot_dir},
                        {"records", result.stats.records},
                        {"text_entries", result.stats.text_entries},
                        {"image_entries", result.stats.image_entries},
                        {"warnings", result.stats.warnings}};
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (index->parsed()) {
            rsrag::VectorStore store = rsrag::VectorStore::load_snapshot(snapshot_dir);
            store.build_ann();
            store.save_snapshot(snapshot_dir);
            json out = {{"snapshot", snapshot_dir},
                        {"text_entries", store.collection(rsrag::Modality::Text).size()},
                        {"image_entries", store.collection(rsrag::Modality::Image).size()},
                        {"ann_built", true}};
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (retrieve_cmd->parsed()) {
            rsrag::VectorStore store = rsrag::VectorStore::load_snapshot(snapshot_dir);
            rsrag::EmbeddingGateway gateway(opts.config.embedder);
            rsrag::RetrievalResult result =
                rsrag::retrieve(store, gateway, make_query(query_text, query_image),
                                opts.config.retrieval_params());
            json candidates = json::array();
            for (const auto& c : result.candidates) {
                json chunks = json::array();
                for (const auto& [entry_id, sim] : c.supporting_chunks)
                    chunks.push_back({{"entry_id", entry_id}, {"similarity", sim}});
                candidates.push_back({{"record_id", c.record_id},
                                      {"s_text", c.text_similarity},
                                      {"s_image", c.image_similarity},
                                      {"fused", c.fused_score},
                                      {"supporting_chunks", std::move(chunks)}});
            }
            json out = {{"candidates", std::move(candidates)},
                        {"alpha_used", result.alpha_used},
                        {"warnings", result.warnings},
                        {"config_hash", opts.config.hash()}};
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (answer_cmd->parsed()) {
            rsrag::Task task = rsrag::task_from_label(task_name);
            resolve_alpha(opts, task);
            rsrag::VectorStore store = rsrag::VectorStore::load_snapshot(snapshot_dir);
            rsrag::EmbeddingGateway gateway(opts.config.embedder);
            rsrag::GenerationGateway generator(opts.config.generator);
            std::unique_ptr<rsrag::FusionClient> fusion;
            if (!opts.config.fusion_endpoint.empty())
                fusion = std::make_unique<rsrag::FusionClient>(opts.config.fusion_endpoint);
            rsrag::AnswerResult answer = rsrag::answer_query(
                store, gateway, generator, make_query(query_text, query_image), task,
                opts.config, fusion.get());
            json record_ids = json::array();
            json fused_scores = json::array();
            for (const auto& c : answer.retrieval.candidates) {
                record_ids.push_back(c.record_id);
                fused_scores.push_back(c.fused_score);
            }
            json out = {{"text", answer.text},
                        {"prompt", answer.prompt.rendered},
                        {"record_ids", std::move(record_ids)},
                        {"fused_scores", std::move(fused_scores)},
                        {"warnings", answer.retrieval.warnings},
                        {"config_hash", opts.config.hash()}};
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (bench->parsed() || sweep_cmd->parsed()) {
            rsrag::Task task = rsrag::task_from_label(task_name);
            resolve_alpha(opts, task);
            if (!opts.generator_given && opts.config.generator.kind ==
                                             rsrag::GeneratorKind::EchoMock &&
                task == rsrag::Task::Classification)
                opts.config.generator.kind = rsrag::GeneratorKind::LabelMock;

            rsrag::Dataset dataset = rsrag::load_dataset(records_path, tasks_path);
            rsrag::EmbeddingGateway gateway(opts.config.embedder);
            rsrag::GenerationGateway generator(opts.config.generator);
            std::unique_ptr<rsrag::FusionClient> fusion;
            if (!opts.config.fusion_endpoint.empty())
                fusion = std::make_unique<rsrag::FusionClient>(opts.config.fusion_endpoint);

            rsrag::VectorStore store =
                snapshot_dir.empty()
                    ? std::move(rsrag::build_store(dataset, opts.config, gateway).store)
                    : rsrag::VectorStore::load_snapshot(snapshot_dir);

            if (bench->parsed()) {
                rsrag::TaskReport report = rsrag::run_task(task, dataset, store, opts.config,
                                                           gateway, generator, fusion.get());
                rsrag::write_task_report(report, out_dir);
                std::cout << rsrag::render_task_report_text(report);
                return 0;
            }
            rsrag::SweepGrid grid{k_values, alpha_values};
            rsrag::SweepReport report = rsrag::sweep(task, dataset, store, opts.config, grid,
                                                     gateway, generator, fusion.get());
            auto dir = rsrag::write_sweep_report(report, out_dir);
            std::cout << rsrag::render_sweep_summary(report);
            std::cout << "written: " << dir.string() << "\n";
            return 0;
        }

        if (serve->parsed()) {
            rsrag::Service service(opts.config);
            if (!snapshot_dir.empty()) service.load_snapshot(snapshot_dir);
            std::cout << "listening on " << host << ":" << port
                      << (service.has_snapshot() ? " (snapshot loaded)" : " (no snapshot)")
                      << "\n";
            service.run(host, port);
            return 0;
        }
    } catch (const rsrag::Error& e) {
        report_error(e);
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error code=Internal msg=" << json(e.what()) << "\n";
        return 4;
    }
    return 0;
}
