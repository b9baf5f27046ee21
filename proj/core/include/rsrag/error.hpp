#pragma once

#include <stdexcept>
#include <string>

namespace rsrag {

enum class ErrorCode {
    // dataset / input
    MissingFile,
    SchemaViolation,
    DanglingReference,
    InvalidRatio,
    ConfigInvalid,
    // embedding / providers
    EmptyInput,
    ProviderUnavailable,
    UnresolvableRef,
    ContentLengthExceeded,
    // vector store
    DimensionMismatch,
    ZeroVector,
    IndexNotBuilt,
    CorruptSnapshot,
    // retrieval
    AlphaOutOfRange,
    MissingModalityEmbedding,
    // context
    BudgetTooSmall,
    // metrics
    EmptyReferences,
    EmptyCorpus,
    LengthMismatch,
    // runner / service
    StoreEmpty,
    IoFailure,
    Internal,
};

const char* error_code_name(ErrorCode code);

/// Library-wide exception. `code` classifies the failure; the CLI maps
/// code classes onto process exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// true for errors caused by bad user input (CLI exit code 2).
bool is_input_error(ErrorCode code);
/// true for errors caused by an external provider (CLI exit code 3).
bool is_provider_error(ErrorCode code);

}  // namespace rsrag
