#include "rsrag/service.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "rsrag/error.hpp"
#include "rsrag/runner.hpp"
#include "rng.hpp"

namespace rsrag {

using nlohmann::json;

namespace {

struct Snapshot {
    VectorStore store;
    std::string id;
};

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(bytes)));
    return buf;
}

int http_status_for(const Error& e) {
    if (e.code() == ErrorCode::ProviderUnavailable ||
        e.code() == ErrorCode::ContentLengthExceeded)
        return 502;
    if (is_input_error(e.code()) || e.code() == ErrorCode::EmptyInput ||
        e.code() == ErrorCode::AlphaOutOfRange ||
        e.code() == ErrorCode::MissingModalityEmbedding)
        return 400;
    return 500;
}

void send_error(httplib::Response& res, int status, const Error& e, const char* stage) {
    json body = {{"error", e.what()}, {"code", error_code_name(e.code())}, {"stage", stage}};
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

struct Service::Impl {
    PipelineConfig config;
    EmbeddingGateway embedder;
    GenerationGateway generator;
    std::unique_ptr<FusionClient> fusion;

    mutable std::mutex snapshot_mutex;
    std::shared_ptr<const Snapshot> snapshot;

    httplib::Server server;
    std::thread server_thread;

    explicit Impl(PipelineConfig cfg)
        : config(std::move(cfg)), embedder(config.embedder), generator(config.generator) {
        if (!config.fusion_endpoint.empty())
            fusion = std::make_unique<FusionClient>(config.fusion_endpoint,
                                                    config.embedder.timeout_ms);
        route();
    }

    std::shared_ptr<const Snapshot> current() const {
        std::lock_guard<std::mutex> lock(snapshot_mutex);
        return snapshot;
    }

    void swap_in(std::shared_ptr<const Snapshot> next) {
        std::lock_guard<std::mutex> lock(snapshot_mutex);
        snapshot = std::move(next);
    }

    json base_response(const std::shared_ptr<const Snapshot>& snap) const {
        return {{"config_hash", config.hash()},
                {"snapshot_id", snap ? snap->id : ""}};
    }

    void route() {
        server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
            auto snap = current();
            json body = base_response(snap);
            body["status"] = "ok";
            body["snapshot_loaded"] = snap != nullptr;
            res.set_content(body.dump(), "application/json");
        });

        server.Get("/v1/config", [this](const httplib::Request&, httplib::Response& res) {
            auto snap = current();
            json body = base_response(snap);
            body["config"] = config.to_json();
            res.set_content(body.dump(), "application/json");
        });

        server.Post("/v1/retrieve", [this](const httplib::Request& req,
                                           httplib::Response& res) {
            handle_retrieve(req, res);
        });

        server.Post("/v1/answer", [this](const httplib::Request& req,
                                         httplib::Response& res) {
            handle_answer(req, res);
        });
    }

    // Parses the shared request fields; throws Error on malformed bodies.
    static json parse_body(const httplib::Request& req) {
        json body = json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object())
            throw Error(ErrorCode::SchemaViolation, "request body must be a JSON object");
        return body;
    }

    PipelineConfig config_for(const json& body) const {
        PipelineConfig c = config;
        c.tau = body.value("tau", c.tau);
        c.top_k = body.value("top_k", c.top_k);
        c.alpha = body.value("alpha", c.alpha);
        c.exact_search = body.value("exact_search", c.exact_search);
        return c;
    }

    void handle_retrieve(const httplib::Request& req, httplib::Response& res) {
        auto snap = current();
        if (!snap) {
            res.status = 503;
            res.set_content(json{{"error", "no snapshot loaded"}}.dump(), "application/json");
            return;
        }
        try {
            json body = parse_body(req);
            Query query{body.value("text", ""), body.value("image_ref", "")};
            PipelineConfig c = config_for(body);
            RetrievalResult result =
                retrieve(snap->store, embedder, query, c.retrieval_params());

            json candidates = json::array();
            for (const RankedCandidate& cand : result.candidates) {
                json chunks = json::array();
                for (const auto& [entry_id, similarity] : cand.supporting_chunks)
                    chunks.push_back({{"entry_id", entry_id}, {"similarity", similarity}});
                candidates.push_back({{"record_id", cand.record_id},
                                      {"s_text", cand.text_similarity},
                                      {"s_image", cand.image_similarity},
                                      {"fused", cand.fused_score},
                                      {"supporting_chunks", std::move(chunks)}});
            }
            json out = base_response(snap);
            out["candidates"] = std::move(candidates);
            out["alpha_used"] = result.alpha_used;
            out["warnings"] = result.warnings;
            res.set_content(out.dump(), "application/json");
        } catch (const Error& e) {
            send_error(res, http_status_for(e), e, "retrieve");
        }
    }

    void handle_answer(const httplib::Request& req, httplib::Response& res) {
        auto snap = current();
        if (!snap) {
            res.status = 503;
            res.set_content(json{{"error", "no snapshot loaded"}}.dump(), "application/json");
            return;
        }
        const char* stage = "retrieve";
        try {
            json body = parse_body(req);
            Query query{body.value("text", ""), body.value("image_ref", "")};
            Task task = Task::VqaWk;
            if (body.contains("task")) task = task_from_label(body["task"].get<std::string>());
            PipelineConfig c = config_for(body);

            stage = "answer";
            AnswerResult answer = answer_query(snap->store, embedder, generator, query, task,
                                               c, fusion.get());

            json out = base_response(snap);
            out["text"] = answer.text;
            out["prompt"] = answer.prompt.rendered;
            json record_ids = json::array();
            json fused_scores = json::array();
            for (const RankedCandidate& cand : answer.retrieval.candidates) {
                record_ids.push_back(cand.record_id);
                fused_scores.push_back(cand.fused_score);
            }
            out["record_ids"] = std::move(record_ids);
            out["fused_scores"] = std::move(fused_scores);
            out["warnings"] = answer.retrieval.warnings;
            res.set_content(out.dump(), "application/json");
        } catch (const Error& e) {
            send_error(res, http_status_for(e), e, stage);
        }
    }
};

Service::Service(PipelineConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    impl_->config.validate();
}

Service::~Service() { stop(); }

void Service::load_snapshot(const std::filesystem::path& dir) {
    auto next = std::make_shared<Snapshot>(
        Snapshot{VectorStore::load_snapshot(dir), hash_file(dir / "manifest.json")});
    impl_->swap_in(std::move(next));
}

bool Service::has_snapshot() const { return impl_->current() != nullptr; }

std::string Service::snapshot_id() const {
    auto snap = impl_->current();
    return snap ? snap->id : "";
}

int Service::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) throw Error(ErrorCode::IoFailure, "cannot bind to " + host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::IoFailure,
                    "cannot bind to " + host + ":" + std::to_string(port));
    }
    impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void Service::run(const std::string& host, int port) {
    start(host, port);
    impl_->server_thread.join();
}

void Service::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

}  // namespace rsrag
