#include "rigidity/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "rigidity/domain.hpp"
#include "rigidity/errors.hpp"

namespace rigidity {

struct Expression::Node {
    enum class Op {
        Constant, Variable, Norm,
        Add, Sub, Mul, Div, Pow, Neg,
        Less, LessEq, Greater, GreaterEq, Equal, NotEqual,
        Call1, Call2, IfElse,
    };
    enum class Fn {
        Cos, Sin, Tan, Exp, Expm1, Log, Log1p, Sqrt, Abs, Cosh, Sinh, Tanh, Sinc,
        Pow, Min, Max,
    };

    Op op = Op::Constant;
    Fn fn = Fn::Cos;
    double value = 0.0;
    int index = 0;
    std::vector<std::shared_ptr<const Node>> args;

    double eval(std::span<const double> u) const;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double y = std::numbers::pi * x;
    if (std::abs(y) < 1e-4) return 1.0 - y * y / 6.0;
    return std::sin(y) / y;
}

double call1(Node::Fn fn, double x) {
    switch (fn) {
    case Node::Fn::Cos: return std::cos(x);
    case Node::Fn::Sin: return std::sin(x);
    case Node::Fn::Tan: return std::tan(x);
    case Node::Fn::Exp: return std::exp(x);
    case Node::Fn::Expm1: return std::expm1(x);
    case Node::Fn::Log: return std::log(x);
    case Node::Fn::Log1p: return std::log1p(x);
    case Node::Fn::Sqrt: return std::sqrt(x);
    case Node::Fn::Abs: return std::abs(x);
    case Node::Fn::Cosh: return std::cosh(x);
    case Node::Fn::Sinh: return std::sinh(x);
    case Node::Fn::Tanh: return std::tanh(x);
    case Node::Fn::Sinc: return sinc(x);
    default: return std::nan("");
    }
}

double call2(Node::Fn fn, double a, double b) {
    switch (fn) {
    case Node::Fn::Pow: return std::pow(a, b);
    case Node::Fn::Min: return std::min(a, b);
    case Node::Fn::Max: return std::max(a, b);
    default: return std::nan("");
    }
}

class Parser {
public:
    Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

    NodePtr parse() {
        auto root = comparison();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::ParseError,
                    "expression '" + std::string(text_) + "': " + msg + " at offset " +
                        std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(std::string_view(&c, 1))) fail(std::string("expected '") + c + "'");
    }

    static NodePtr make(Node::Op op, std::vector<NodePtr> args = {}) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->args = std::move(args);
        return n;
    }

    static NodePtr constant(double v) {
        auto n = std::make_shared<Node>();
        n->op = Node::Op::Constant;
        n->value = v;
        return n;
    }

    NodePtr comparison() {
        auto lhs = additive();
        struct Cmp { std::string_view tok; Node::Op op; };
        static constexpr Cmp cmps[] = {
            {"<=", Node::Op::LessEq}, {">=", Node::Op::GreaterEq}, {"==", Node::Op::Equal},
            {"!=", Node::Op::NotEqual}, {"<", Node::Op::Less}, {">", Node::Op::Greater},
        };
        for (const auto& c : cmps) {
            if (accept(c.tok)) return make(c.op, {lhs, additive()});
        }
        return lhs;
    }

    NodePtr additive() {
        auto lhs = multiplicative();
        for (;;) {
            if (accept("+")) lhs = make(Node::Op::Add, {lhs, multiplicative()});
            else if (accept("-")) lhs = make(Node::Op::Sub, {lhs, multiplicative()});
            else return lhs;
        }
    }

    NodePtr multiplicative() {
        auto lhs = unary();
        for (;;) {
            if (accept("*")) lhs = make(Node::Op::Mul, {lhs, unary()});
            else if (accept("/")) lhs = make(Node::Op::Div, {lhs, unary()});
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept("-")) return make(Node::Op::Neg, {unary()});
        if (accept("+")) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept("^")) return make(Node::Op::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = comparison();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        const std::string rest(text_.substr(pos_));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(rest, &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += used;
        return constant(v);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));

        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            ++pos_;
            std::vector<NodePtr> args;
            skip_ws();
            if (!accept(")")) {
                args.push_back(comparison());
                while (accept(",")) args.push_back(comparison());
                expect(')');
            }
            return call(name, std::move(args));
        }

        if (name == "pi") return constant(std::numbers::pi);
        if (name == "e") return constant(std::numbers::e);
        if (name == "r" || name == "norm") return make(Node::Op::Norm);
        if ((name[0] == 'u' || name[0] == 'x') && name.size() > 1) {
            int idx = 0;
            for (std::size_t i = 1; i < name.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) fail("unknown identifier '" + name + "'");
                idx = idx * 10 + (name[i] - '0');
            }
            if (idx < 1 || idx > dim_)
                fail("variable '" + name + "' out of range for dimension " + std::to_string(dim_));
            auto n = std::make_shared<Node>();
            n->op = Node::Op::Variable;
            n->index = idx - 1;
            return n;
        }
        fail("unknown identifier '" + name + "'");
    }

    NodePtr call(const std::string& name, std::vector<NodePtr> args) {
        struct Entry { std::string_view name; Node::Fn fn; std::size_t arity; };
        static constexpr Entry table[] = {
            {"cos", Node::Fn::Cos, 1}, {"sin", Node::Fn::Sin, 1}, {"tan", Node::Fn::Tan, 1},
            {"exp", Node::Fn::Exp, 1}, {"expm1", Node::Fn::Expm1, 1}, {"log", Node::Fn::Log, 1},
            {"log1p", Node::Fn::Log1p, 1}, {"sqrt", Node::Fn::Sqrt, 1}, {"abs", Node::Fn::Abs, 1},
            {"cosh", Node::Fn::Cosh, 1}, {"sinh", Node::Fn::Sinh, 1}, {"tanh", Node::Fn::Tanh, 1},
            {"sinc", Node::Fn::Sinc, 1}, {"pow", Node::Fn::Pow, 2}, {"min", Node::Fn::Min, 2},
            {"max", Node::Fn::Max, 2},
        };
        if (name == "ifelse") {
            if (args.size() != 3) fail("ifelse expects 3 arguments");
            return make(Node::Op::IfElse, std::move(args));
        }
        for (const auto& e : table) {
            if (e.name != name) continue;
            if (args.size() != e.arity)
                fail(name + " expects " + std::to_string(e.arity) + " argument(s)");
            auto n = std::make_shared<Node>();
            n->op = e.arity == 1 ? Node::Op::Call1 : Node::Op::Call2;
            n->fn = e.fn;
            n->args = std::move(args);
            return n;
        }
        fail("unknown function '" + name + "'");
    }

    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;
};

}  // namespace

double Expression::Node::eval(std::span<const double> u) const {
    auto a = [&](std::size_t i) { return args[i]->eval(u); };
    switch (op) {
    case Op::Constant: return value;
    case Op::Variable: return u[static_cast<std::size_t>(index)];
    case Op::Norm: return norm2(u);
    case Op::Add: return a(0) + a(1);
    case Op::Sub: return a(0) - a(1);
    case Op::Mul: return a(0) * a(1);
    case Op::Div: return a(0) / a(1);
    case Op::Pow: {
        const double base = a(0);
        const double ex = a(1);
        // Small integer exponents are common (u^2, r^4) and exact by repeated product.
        if (ex == std::floor(ex) && std::abs(ex) <= 16) {
            double r = 1.0;
            for (int i = 0; i < static_cast<int>(std::abs(ex)); ++i) r *= base;
            return ex < 0 ? 1.0 / r : r;
        }
        return std::pow(base, ex);
    }
    case Op::Neg: return -a(0);
    case Op::Less: return a(0) < a(1) ? 1.0 : 0.0;
    case Op::LessEq: return a(0) <= a(1) ? 1.0 : 0.0;
    case Op::Greater: return a(0) > a(1) ? 1.0 : 0.0;
    case Op::GreaterEq: return a(0) >= a(1) ? 1.0 : 0.0;
    case Op::Equal: return a(0) == a(1) ? 1.0 : 0.0;
    case Op::NotEqual: return a(0) != a(1) ? 1.0 : 0.0;
    case Op::Call1: return call1(fn, a(0));
    case Op::Call2: return call2(fn, a(0), a(1));
    case Op::IfElse: return a(0) != 0.0 ? a(1) : a(2);
    }
    return std::nan("");
}

Expression Expression::parse(std::string_view text, int dim) {
    if (dim < 1) throw Error(ErrorCode::ParseError, "expression dimension must be >= 1");
    Parser p(text, dim);
    return Expression(p.parse(), std::string(text), dim);
}

double Expression::operator()(std::span<const double> u) const {
    return root_->eval(u);
}

}  // namespace rigidity
