#include "rsrag/context.hpp"

#include <algorithm>
#include <chrono>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "rsrag/error.hpp"
#include "rsrag/tokenizer.hpp"

namespace rsrag {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

namespace {

struct ChunkBuilder {
    const std::string& record_id;
    std::size_t budget;
    std::vector<TextChunk> chunks;

    std::string text;
    std::vector<std::string> fields;
    std::size_t tokens = 0;

    void append(const std::string& field, std::string_view piece, std::size_t piece_tokens) {
        text += piece;
        tokens += piece_tokens;
        if (fields.empty() || fields.back() != field) fields.push_back(field);
    }

    void flush() {
        if (text.empty()) return;
        chunks.push_back({record_id, chunks.size(), std::move(fields), std::move(text), tokens});
        text.clear();
        fields.clear();
        tokens = 0;
    }
};

}  // namespace

std::vector<TextChunk> chunk_document(const KnowledgeDocument& doc, std::size_t budget) {
    if (budget < kMinChunkBudget)
        throw Error(ErrorCode::BudgetTooSmall,
                    "chunk budget must be >= " + std::to_string(kMinChunkBudget) + ", got " +
                        std::to_string(budget));

    ChunkBuilder b{doc.record_id, budget, {}, {}, {}, 0};
    for (const DocSection& section : doc.sections) {
        const std::size_t section_tokens = token_count(section.text);
        if (section_tokens <= budget) {
            if (b.tokens + section_tokens > budget) b.flush();
            b.append(section.field, section.text, section_tokens);
            continue;
        }

        // Oversized field: close the running chunk, then pack its sentences.
        b.flush();
        for (std::string_view sentence : split_sentences(section.text)) {
            const std::size_t sentence_tokens = token_count(sentence);
            if (sentence_tokens <= budget) {
                if (b.tokens + sentence_tokens > budget) b.flush();
                b.append(section.field, sentence, sentence_tokens);
                continue;
            }
            // Last resort: token-boundary split of one giant sentence.
            b.flush();
            auto spans = token_spans(sentence);
            std::size_t byte_begin = 0;
            for (std::size_t t = 0; t < spans.size(); t += budget) {
                std::size_t t_end = std::min(t + budget, spans.size());
                std::size_t byte_end =
                    t_end < spans.size() ? spans[t_end].first : sentence.size();
                std::string_view piece = sentence.substr(byte_begin, byte_end - byte_begin);
                b.append(section.field, piece, t_end - t);
                b.flush();
                byte_begin = byte_end;
            }
        }
        b.flush();  // a split field never shares a chunk with the next field
    }
    b.flush();
    return std::move(b.chunks);
}

// ---------------------------------------------------------------------------
// Context fusion
// ---------------------------------------------------------------------------

FusionClient::FusionClient(std::string endpoint, int timeout_ms, int max_retries)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms), max_retries_(max_retries) {
    if (endpoint_.empty())
        throw Error(ErrorCode::ConfigInvalid, "fusion client requires an endpoint");
}

std::string FusionClient::fuse(const std::vector<std::string>& snippets,
                               std::size_t max_tokens) const {
    json request = {{"snippets", snippets}, {"max_tokens", max_tokens}};
    const std::string body = request.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        httplib::Client client(endpoint_);
        client.set_connection_timeout(0, timeout_ms_ * 1000);
        client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
        auto res = client.Post("/fuse", body, "application/json");
        if (!res) {
            last_error = "no response from " + endpoint_;
            continue;
        }
        if (res->status >= 500) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorCode::ProviderUnavailable,
                        "fusion model rejected request: status " + std::to_string(res->status));
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("text") || !reply["text"].is_string())
            throw Error(ErrorCode::ProviderUnavailable, "malformed fusion response");
        return reply["text"].get<std::string>();
    }
    throw Error(ErrorCode::ProviderUnavailable,
                "fusion model unreachable after " + std::to_string(max_retries_ + 1) +
                    " attempts (" + last_error + ")");
}

namespace {

std::string deterministic_fuse(const std::vector<Snippet>& snippets, std::size_t max_tokens) {
    std::string out;
    std::size_t total_tokens = 0;
    std::unordered_set<std::string> seen;

    for (const Snippet& snippet : snippets) {
        for (std::string_view sentence : split_sentences(snippet.text)) {
            std::string key = normalize_label(sentence);
            if (key.empty()) continue;
            if (!seen.insert(std::move(key)).second) continue;
            std::size_t n = token_count(sentence);
            if (total_tokens + n > max_tokens) {
                if (!out.empty()) return out;
                // Nothing fits: keep a token-truncated head so the context is
                // never empty for non-empty input.
                auto spans = token_spans(sentence);
                std::size_t cut = spans[std::min(max_tokens, spans.size()) - 1].second;
                return std::string(sentence.substr(0, cut));
            }
            out += sentence;
            total_tokens += n;
        }
    }
    return out;
}

}  // namespace

FusedContext fuse_context(const std::vector<Snippet>& snippets, FusionMode mode,
                          std::size_t max_tokens, const FusionClient* client) {
    if (snippets.empty())
        throw Error(ErrorCode::EmptyInput, "fuse_context: no snippets");
    if (max_tokens == 0)
        throw Error(ErrorCode::ConfigInvalid, "fusion cap must be positive");

    FusedContext out;
    out.fusion_mode = mode;
    for (const Snippet& s : snippets)
        if (out.source_records.empty() || out.source_records.back().first != s.record_id)
            out.source_records.emplace_back(s.record_id, s.score);

    if (mode == FusionMode::Model) {
        if (!client)
            throw Error(ErrorCode::ProviderUnavailable, "model fusion requires a client");
        std::vector<std::string> texts;
        texts.reserve(snippets.size());
        for (const Snippet& s : snippets) texts.push_back(s.text);
        out.text = client->fuse(texts, max_tokens);
    } else {
        out.text = deterministic_fuse(snippets, max_tokens);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

Prompt build_prompt(const std::string& instruction, const std::string& query_text,
                    const std::string& knowledge_header, const FusedContext& context) {
    if (instruction.empty())
        throw Error(ErrorCode::EmptyInput, "prompt instruction must be non-empty");
    if (knowledge_header.empty())
        throw Error(ErrorCode::EmptyInput, "knowledge header must be non-empty");

    Prompt p;
    p.instruction = instruction;
    p.query_text = query_text;
    p.knowledge_header = knowledge_header;
    p.context = context.text;
    p.rendered = instruction + "\n" + query_text + "\n" + knowledge_header + "\n" + context.text;
    return p;
}

TaskPreset preset_for_task(Task task) {
    TaskPreset preset;
    switch (task) {
        case Task::Captioning:
            preset.instruction = "Describe this satellite image using the retrieved knowledge:";
            break;
        case Task::Classification:
            preset.instruction =
                "Classify this scene into one of the 16 categories using the retrieved "
                "knowledge:";
            preset.alpha = 0.5;
            break;
        case Task::VqaC:
        case Task::VqaRsk:
        case Task::VqaWk:
            preset.instruction =
                "Answer the following question based on the retrieved knowledge:";
            break;
    }
    return preset;
}

}  // namespace rsrag
