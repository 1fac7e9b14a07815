#pragma once

#include <stdexcept>
#include <string>

namespace rigidity {

/// Failure categories surfaced by the library. The string form is what the
/// CLI writes into its structured error document.
enum class ErrorCode {
    NonSummableCovariance,
    NegativeDensity,
    QuadratureFailure,
    EvaluationFailure,
    IllConditioned,
    MissingAnnotations,
    InconsistentAnnotations,
    TransformMismatch,
    EmbeddingFailure,
    ParseError,
    ValidationError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace rigidity
