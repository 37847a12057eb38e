#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "mega/mathcheck/rational.hpp"

namespace mega::mathcheck {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Function { Sqrt, Sin, Cos, Tan, Abs, Factorial };

std::string_view function_name(Function fn) noexcept;
std::optional<Function> function_from_name(std::string_view name) noexcept;

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Literal. `exact` is empty when the literal does not fit a 64-bit rational.
struct Number {
    std::optional<Rational> exact;
    double value = 0.0;
};

struct Variable {
    std::string name;
};

// The only unary operator is negation.
struct Negate {
    ExprPtr operand;
};

struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

struct Call {
    Function fn;
    ExprPtr arg;
};

// Immutable expression tree node. Trig functions take radians.
class Expr {
public:
    using Node = std::variant<Number, Variable, Negate, Binary, Call>;

    explicit Expr(Node node) : node_(std::move(node)) {}

    const Node& node() const noexcept { return node_; }

    template <typename T>
    const T* as() const noexcept {
        return std::get_if<T>(&node_);
    }

    static ExprPtr number(Rational value);
    static ExprPtr inexact(double value);
    static ExprPtr variable(std::string name);
    static ExprPtr negate(ExprPtr operand);
    static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
    static ExprPtr call(Function fn, ExprPtr arg);

private:
    Node node_;
};

// Structural equality. Numbers compare by exact value when both are exact.
bool structurally_equal(const Expr& a, const Expr& b);

// Grammar, loosest to tightest: + -, * / (and implicit multiplication such
// as "2x" or "3(x+1)"), unary minus, ^ (right associative), postfix !.
// Accepts the unicode minus, times and division signs. "pi" is a constant;
// other multi-letter words must name a function.
ExprPtr parse_expression(std::string_view text);

// Fully parenthesised where needed so that parse(print(e)) is structurally
// equal to e.
std::string print(const Expr& e);

std::set<std::string> free_variables(const Expr& e);

using Bindings = std::map<std::string, double, std::less<>>;

// Tracks the smallest-magnitude divisor seen during evaluation. tan(u) counts
// cos(u) as a divisor.
struct EvalTrace {
    double min_divisor = std::numeric_limits<double>::infinity();
};

// Double evaluation. Throws Error(DomainError) for sqrt of a negative,
// factorial of a negative or non-integer, division by zero and
// non-finite results; Error(UnboundVariable) for a free variable without a
// binding ("pi" needs none).
double evaluate(const Expr& e, const Bindings& bindings = {}, EvalTrace* trace = nullptr);

// Exact evaluation when every node is a rational literal and the operators
// are + - * / and ^ with an integer exponent (abs and small factorials are
// also exact). Returns nullopt otherwise; sets *overflowed when the only
// obstacle was 64-bit overflow.
std::optional<Rational> evaluate_exact(const Expr& e, bool* overflowed = nullptr);

}  // namespace mega::mathcheck
