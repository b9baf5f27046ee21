#include "rsrag/generation.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rsrag/error.hpp"
#include "rsrag/tokenizer.hpp"

namespace rsrag {

using nlohmann::json;

void GeneratorProfile::validate() const {
    if (kind == GeneratorKind::Remote && endpoint.empty())
        throw Error(ErrorCode::ConfigInvalid, "remote generator requires an endpoint");
}

GeneratorProfile GeneratorProfile::from_env() {
    GeneratorProfile p;
    if (const char* url = std::getenv("RSRAG_VLM_URL"); url && *url) {
        p.kind = GeneratorKind::Remote;
        p.endpoint = url;
    }
    if (const char* t = std::getenv("RSRAG_HTTP_TIMEOUT_MS"); t && *t)
        p.timeout_ms = static_cast<int>(std::strtol(t, nullptr, 10));
    return p;
}

GenerationGateway::GenerationGateway(GeneratorProfile profile) : profile_(std::move(profile)) {
    profile_.validate();
}

std::string extract_category_label(const std::string& text) {
    std::string lower(text.size(), '\0');
    std::transform(text.begin(), text.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    std::size_t best_pos = std::string::npos;
    const std::string* best = nullptr;
    for (const std::string& label : category_labels()) {
        std::string needle(label.size(), '\0');
        std::transform(label.begin(), label.end(), needle.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        std::size_t pos = lower.find(needle);
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && label.size() > best->size())) {
            best_pos = pos;
            best = &label;
        }
    }
    return best ? *best : "unknown";
}

std::string GenerationGateway::generate(const GenerationRequest& request) const {
    if (request.max_tokens == 0)
        throw Error(ErrorCode::ConfigInvalid, "max_tokens must be positive");
    if (request.temperature < 0.0)
        throw Error(ErrorCode::ConfigInvalid, "temperature must be >= 0");

    std::string text;
    switch (profile_.kind) {
        case GeneratorKind::EchoMock:
            text = request.prompt.context;
            break;
        case GeneratorKind::LabelMock:
            text = extract_category_label(request.prompt.context);
            break;
        case GeneratorKind::Remote:
            text = remote_generate(request);
            break;
    }
    if (text.empty())
        throw Error(ErrorCode::ProviderUnavailable, "generator produced empty text");
    if (token_count(text) > request.max_tokens)
        throw Error(ErrorCode::ContentLengthExceeded,
                    "generator produced " + std::to_string(token_count(text)) +
                        " tokens, limit " + std::to_string(request.max_tokens));
    return text;
}

std::string GenerationGateway::remote_generate(const GenerationRequest& request) const {
    json body_json = {{"image", request.image_ref},
                      {"prompt", request.prompt.rendered},
                      {"max_tokens", request.max_tokens},
                      {"temperature", request.temperature}};
    const std::string body = body_json.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= profile_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        httplib::Client client(profile_.endpoint);
        client.set_connection_timeout(0, profile_.timeout_ms * 1000);
        client.set_read_timeout(profile_.timeout_ms / 1000, (profile_.timeout_ms % 1000) * 1000);
        auto res = client.Post("/generate", body, "application/json");
        if (!res) {
            last_error = "no response from " + profile_.endpoint;
            continue;
        }
        if (res->status >= 500) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorCode::ProviderUnavailable,
                        "generator rejected request: status " + std::to_string(res->status));
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("text") || !reply["text"].is_string())
            throw Error(ErrorCode::ProviderUnavailable, "malformed generator response");
        return reply["text"].get<std::string>();
    }
    throw Error(ErrorCode::ProviderUnavailable,
                "generator unreachable after " + std::to_string(profile_.max_retries + 1) +
                    " attempts (" + last_error + ")");
}

}  // namespace rsrag
