#include "rigidity/errors.hpp"

namespace rigidity {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NonSummableCovariance: return "NonSummableCovariance";
    case ErrorCode::NegativeDensity: return "NegativeDensity";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::EvaluationFailure: return "EvaluationFailure";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::MissingAnnotations: return "MissingAnnotations";
    case ErrorCode::InconsistentAnnotations: return "InconsistentAnnotations";
    case ErrorCode::TransformMismatch: return "TransformMismatch";
    case ErrorCode::EmbeddingFailure: return "EmbeddingFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

}  // namespace rigidity
