#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace rigidity {

/// A small arithmetic language over a frequency (or space) vector.
///
/// Variables: u1..ud (x1..xd are accepted as aliases), r / norm for the
/// Euclidean norm of the argument, and the constants pi and e.
/// Operators: + - * / ^ with the usual precedence, unary minus, and the
/// comparisons < <= > >= == != (yielding 0 or 1).
/// Functions: cos sin tan exp expm1 log log1p sqrt abs cosh sinh tanh sinc
/// (normalized, sin(pi x)/(pi x)), pow(a,b), min(a,b), max(a,b), ifelse(c,a,b).
class Expression {
public:
    /// Throws Error(ParseError) on malformed input or on a variable index
    /// exceeding `dim`.
    static Expression parse(std::string_view text, int dim);

    double operator()(std::span<const double> u) const;

    const std::string& source() const noexcept { return source_; }
    int dim() const noexcept { return dim_; }

    struct Node;

private:
    Expression(std::shared_ptr<const Node> root, std::string source, int dim)
        : root_(std::move(root)), source_(std::move(source)), dim_(dim) {}

    std::shared_ptr<const Node> root_;
    std::string source_;
    int dim_ = 1;
};

}  // namespace rigidity
