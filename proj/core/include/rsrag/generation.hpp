#pragma once

#include <string>

#include "rsrag/context.hpp"

namespace rsrag {

enum class GeneratorKind { EchoMock, LabelMock, Remote };

struct GeneratorProfile {
    GeneratorKind kind = GeneratorKind::EchoMock;
    std::string endpoint;       // remote only
    int timeout_ms = 10000;
    int max_retries = 2;

    void validate() const;  // Errors: ConfigInvalid
    static GeneratorProfile from_env();  // RSRAG_VLM_URL selects Remote
};

struct GenerationRequest {
    std::string image_ref;
    Prompt prompt;
    std::size_t max_tokens = 512;
    double temperature = 0.0;  // all test/benchmark presets pin 0
};

/// Answer generator behind one call. The echo mock returns the context
/// segment of the prompt verbatim; the label mock extracts the first category
/// label present in the context ("unknown" when none matches); the remote
/// provider posts {"image", "prompt", "max_tokens", "temperature"} and
/// expects {"text"}. Mocks are pure functions of the request.
class GenerationGateway {
public:
    explicit GenerationGateway(GeneratorProfile profile);

    /// Errors: ConfigInvalid (bad request bounds), ProviderUnavailable,
    /// ContentLengthExceeded (reply longer than max_tokens tokens).
    std::string generate(const GenerationRequest& request) const;

    const GeneratorProfile& profile() const { return profile_; }

private:
    std::string remote_generate(const GenerationRequest& request) const;
    GeneratorProfile profile_;
};

/// First category label occurring in `text` (case-insensitive; earliest
/// offset wins, longer label on ties), or "unknown".
std::string extract_category_label(const std::string& text);

}  // namespace rsrag
