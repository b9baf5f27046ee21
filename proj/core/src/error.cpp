#include "rsrag/error.hpp"

namespace rsrag {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::DanglingReference: return "DanglingReference";
        case ErrorCode::InvalidRatio: return "InvalidRatio";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::UnresolvableRef: return "UnresolvableRef";
        case ErrorCode::ContentLengthExceeded: return "ContentLengthExceeded";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::IndexNotBuilt: return "IndexNotBuilt";
        case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
        case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
        case ErrorCode::MissingModalityEmbedding: return "MissingModalityEmbedding";
        case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
        case ErrorCode::EmptyReferences: return "EmptyReferences";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::StoreEmpty: return "StoreEmpty";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFile:
        case ErrorCode::SchemaViolation:
        case ErrorCode::DanglingReference:
        case ErrorCode::InvalidRatio:
        case ErrorCode::ConfigInvalid:
        case ErrorCode::EmptyInput:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::AlphaOutOfRange:
        case ErrorCode::MissingModalityEmbedding:
        case ErrorCode::BudgetTooSmall:
        case ErrorCode::EmptyReferences:
        case ErrorCode::EmptyCorpus:
        case ErrorCode::LengthMismatch:
        case ErrorCode::CorruptSnapshot:
            return true;
        default:
            return false;
    }
}

bool is_provider_error(ErrorCode code) {
    return code == ErrorCode::ProviderUnavailable || code == ErrorCode::UnresolvableRef ||
           code == ErrorCode::ContentLengthExceeded;
}

}  // namespace rsrag
