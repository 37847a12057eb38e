#include "mega/mathcheck/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <numbers>
#include <sstream>
#include <vector>

#include "mega/error.hpp"

namespace mega::mathcheck {

std::string_view function_name(Function fn) noexcept {
    switch (fn) {
        case Function::Sqrt: return "sqrt";
        case Function::Sin: return "sin";
        case Function::Cos: return "cos";
        case Function::Tan: return "tan";
        case Function::Abs: return "abs";
        case Function::Factorial: return "factorial";
    }
    return "?";
}

std::optional<Function> function_from_name(std::string_view name) noexcept {
    static constexpr std::array<std::pair<std::string_view, Function>, 6> kNames{{
        {"sqrt", Function::Sqrt},
        {"sin", Function::Sin},
        {"cos", Function::Cos},
        {"tan", Function::Tan},
        {"abs", Function::Abs},
        {"factorial", Function::Factorial},
    }};
    for (const auto& [n, fn] : kNames)
        if (n == name) return fn;
    return std::nullopt;
}

ExprPtr Expr::number(Rational value) {
    return std::make_shared<const Expr>(Number{value, value.to_double()});
}
ExprPtr Expr::inexact(double value) { return std::make_shared<const Expr>(Number{std::nullopt, value}); }
ExprPtr Expr::variable(std::string name) { return std::make_shared<const Expr>(Variable{std::move(name)}); }
ExprPtr Expr::negate(ExprPtr operand) { return std::make_shared<const Expr>(Negate{std::move(operand)}); }
ExprPtr Expr::binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<const Expr>(Binary{op, std::move(lhs), std::move(rhs)});
}
ExprPtr Expr::call(Function fn, ExprPtr arg) { return std::make_shared<const Expr>(Call{fn, std::move(arg)}); }

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.node().index() != b.node().index()) return false;
    return std::visit(
        [&](const auto& lhs) -> bool {
            using T = std::decay_t<decltype(lhs)>;
            const auto& rhs = std::get<T>(b.node());
            if constexpr (std::is_same_v<T, Number>) {
                if (lhs.exact && rhs.exact) return *lhs.exact == *rhs.exact;
                return lhs.value == rhs.value;
            } else if constexpr (std::is_same_v<T, Variable>) {
                return lhs.name == rhs.name;
            } else if constexpr (std::is_same_v<T, Negate>) {
                return structurally_equal(*lhs.operand, *rhs.operand);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return lhs.op == rhs.op && structurally_equal(*lhs.lhs, *rhs.lhs) &&
                       structurally_equal(*lhs.rhs, *rhs.rhs);
            } else {
                return lhs.fn == rhs.fn && structurally_equal(*lhs.arg, *rhs.arg);
            }
        },
        a.node());
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Number, Ident, Op, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    char op = 0;
    std::size_t offset = 0;
};

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
            std::size_t start = i;
            bool point = false;
            while (i < s.size() && (is_digit(s[i]) || (s[i] == '.' && !point))) {
                if (s[i] == '.') point = true;
                ++i;
            }
            out.push_back({Tok::Number, std::string(s.substr(start, i - start)), 0, start});
            continue;
        }
        if (is_alpha(c)) {
            std::size_t start = i;
            while (i < s.size() && is_alpha(s[i])) ++i;
            out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), 0, start});
            continue;
        }
        switch (c) {
            case '+': case '-': case '*': case '/': case '^': case '!': case '(': case ')':
                out.push_back({Tok::Op, {}, c, i});
                ++i;
                continue;
            default:
                break;
        }
        // Multi-byte operator spellings.
        auto starts = [&](std::string_view seq) { return s.substr(i, seq.size()) == seq; };
        if (starts("\xE2\x88\x92")) {  // U+2212 minus sign
            out.push_back({Tok::Op, {}, '-', i});
            i += 3;
            continue;
        }
        if (starts("\xC3\x97") || starts("\xC2\xB7")) {  // multiplication sign, middle dot
            out.push_back({Tok::Op, {}, '*', i});
            i += 2;
            continue;
        }
        if (starts("\xC3\xB7")) {  // division sign
            out.push_back({Tok::Op, {}, '/', i});
            i += 2;
            continue;
        }
        throw SyntaxError(i, "unexpected character");
    }
    out.push_back({Tok::End, {}, 0, s.size()});
    return out;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(lex(text)) {}

    ExprPtr parse() {
        ExprPtr e = parse_sum();
        if (peek().kind != Tok::End) throw SyntaxError(peek().offset, "unexpected token");
        return e;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    bool at_op(char op) const { return peek().kind == Tok::Op && peek().op == op; }
    void consume() { ++pos_; }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_product();
        while (at_op('+') || at_op('-')) {
            BinaryOp op = peek().op == '+' ? BinaryOp::Add : BinaryOp::Sub;
            consume();
            lhs = Expr::binary(op, lhs, parse_product());
        }
        return lhs;
    }

    bool starts_operand() const {
        const Token& t = peek();
        return t.kind == Tok::Number || t.kind == Tok::Ident || (t.kind == Tok::Op && t.op == '(');
    }

    ExprPtr parse_product() {
        ExprPtr lhs = parse_signed();
        for (;;) {
            if (at_op('*') || at_op('/')) {
                BinaryOp op = peek().op == '*' ? BinaryOp::Mul : BinaryOp::Div;
                consume();
                lhs = Expr::binary(op, lhs, parse_signed());
            } else if (starts_operand()) {
                lhs = Expr::binary(BinaryOp::Mul, lhs, parse_power());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_signed() {
        if (at_op('-')) {
            consume();
            return Expr::negate(parse_signed());
        }
        if (at_op('+')) {
            consume();
            return parse_signed();
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_postfix();
        if (at_op('^')) {
            consume();
            return Expr::binary(BinaryOp::Pow, base, parse_signed_exponent());
        }
        return base;
    }

    ExprPtr parse_signed_exponent() {
        if (at_op('-')) {
            consume();
            return Expr::negate(parse_signed_exponent());
        }
        if (at_op('+')) {
            consume();
            return parse_signed_exponent();
        }
        return parse_power();
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (at_op('!')) {
            consume();
            e = Expr::call(Function::Factorial, e);
        }
        return e;
    }

    ExprPtr parse_primary() {
        const Token t = peek();
        switch (t.kind) {
            case Tok::Number: {
                consume();
                if (auto r = Rational::from_decimal(t.text)) return Expr::number(*r);
                double v = 0;
                std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                return Expr::inexact(v);
            }
            case Tok::Ident: {
                consume();
                if (auto fn = function_from_name(t.text)) {
                    if (!at_op('(')) throw SyntaxError(peek().offset, "expected '(' after " + t.text);
                    consume();
                    ExprPtr arg = parse_sum();
                    expect_close();
                    return Expr::call(*fn, arg);
                }
                if (t.text == "pi") return Expr::variable("pi");
                if (t.text.size() == 1) return Expr::variable(t.text);
                if (at_op('(')) throw Error(Errc::UnknownFunction, "unknown function '" + t.text + "'");
                throw SyntaxError(t.offset, "unknown identifier '" + t.text + "'");
            }
            case Tok::Op:
                if (t.op == '(') {
                    consume();
                    ExprPtr e = parse_sum();
                    expect_close();
                    return e;
                }
                throw SyntaxError(t.offset, std::string("unexpected '") + t.op + "'");
            case Tok::End:
                throw SyntaxError(t.offset, "unexpected end of input");
        }
        throw SyntaxError(t.offset, "unexpected token");
    }

    void expect_close() {
        if (!at_op(')')) throw SyntaxError(peek().offset, "expected ')'");
        consume();
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printer

constexpr int kPrecSum = 1;
constexpr int kPrecProduct = 2;
constexpr int kPrecNegate = 3;
constexpr int kPrecPower = 4;
constexpr int kPrecPostfix = 5;
constexpr int kPrecAtom = 6;

bool terminating_decimal(std::int64_t den) {
    while (den % 2 == 0) den /= 2;
    while (den % 5 == 0) den /= 5;
    return den == 1;
}

std::string print_number(const Number& n) {
    if (!n.exact) {
        std::array<char, 512> buf{};
        auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), n.value, std::chars_format::fixed);
        return std::string(buf.data(), end);
    }
    const Rational& r = *n.exact;
    if (r.is_integer()) return std::to_string(r.num());
    if (!terminating_decimal(r.den())) return "(" + r.to_string() + ")";
    // Scale to a power-of-ten denominator.
    std::int64_t num = r.num();
    std::int64_t den = r.den();
    int digits = 0;
    while (den != 1) {
        num *= 10;
        std::int64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
        ++digits;
    }
    bool negative = num < 0;
    std::string mag = std::to_string(negative ? -num : num);
    if (static_cast<int>(mag.size()) <= digits) mag.insert(0, digits - mag.size() + 1, '0');
    mag.insert(mag.size() - digits, ".");
    return negative ? "-" + mag : mag;
}

int precedence(const Expr& e) {
    return std::visit(
        [](const auto& n) -> int {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Number>) {
                if (n.exact && n.exact->is_negative()) return kPrecNegate;
                if (!n.exact && n.value < 0) return kPrecNegate;
                return kPrecAtom;
            } else if constexpr (std::is_same_v<T, Variable>) {
                return kPrecAtom;
            } else if constexpr (std::is_same_v<T, Negate>) {
                return kPrecNegate;
            } else if constexpr (std::is_same_v<T, Binary>) {
                switch (n.op) {
                    case BinaryOp::Add:
                    case BinaryOp::Sub: return kPrecSum;
                    case BinaryOp::Mul:
                    case BinaryOp::Div: return kPrecProduct;
                    case BinaryOp::Pow: return kPrecPower;
                }
                return kPrecSum;
            } else {
                return n.fn == Function::Factorial ? kPrecPostfix : kPrecAtom;
            }
        },
        e.node());
}

void print_into(const Expr& e, std::ostringstream& os);

void print_child(const Expr& child, int min_prec, std::ostringstream& os) {
    if (precedence(child) < min_prec) {
        os << '(';
        print_into(child, os);
        os << ')';
    } else {
        print_into(child, os);
    }
}

void print_into(const Expr& e, std::ostringstream& os) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Number>) {
                os << print_number(n);
            } else if constexpr (std::is_same_v<T, Variable>) {
                os << n.name;
            } else if constexpr (std::is_same_v<T, Negate>) {
                os << '-';
                print_child(*n.operand, kPrecNegate, os);
            } else if constexpr (std::is_same_v<T, Binary>) {
                switch (n.op) {
                    case BinaryOp::Add:
                    case BinaryOp::Sub:
                        print_child(*n.lhs, kPrecSum, os);
                        os << (n.op == BinaryOp::Add ? " + " : " - ");
                        print_child(*n.rhs, kPrecSum + 1, os);
                        break;
                    case BinaryOp::Mul:
                    case BinaryOp::Div:
                        print_child(*n.lhs, kPrecProduct, os);
                        os << (n.op == BinaryOp::Mul ? "*" : "/");
                        print_child(*n.rhs, kPrecProduct + 1, os);
                        break;
                    case BinaryOp::Pow:
                        print_child(*n.lhs, kPrecPostfix, os);
                        os << '^';
                        print_child(*n.rhs, kPrecNegate, os);
                        break;
                }
            } else {
                if (n.fn == Function::Factorial) {
                    print_child(*n.arg, kPrecPostfix, os);
                    os << '!';
                } else {
                    os << function_name(n.fn) << '(';
                    print_into(*n.arg, os);
                    os << ')';
                }
            }
        },
        e.node());
}

void collect_variables(const Expr& e, std::set<std::string>& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Variable>) {
                if (n.name != "pi") out.insert(n.name);
            } else if constexpr (std::is_same_v<T, Negate>) {
                collect_variables(*n.operand, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                collect_variables(*n.lhs, out);
                collect_variables(*n.rhs, out);
            } else if constexpr (std::is_same_v<T, Call>) {
                collect_variables(*n.arg, out);
            }
        },
        e.node());
}

[[noreturn]] void domain_error(const std::string& what) { throw Error(Errc::DomainError, what); }

double checked(double v, const char* what) {
    if (!std::isfinite(v)) domain_error(std::string("non-finite result in ") + what);
    return v;
}

double factorial_of(double v) {
    if (v < 0 || std::floor(v) != v) domain_error("factorial of a negative or non-integer value");
    if (v > 170) domain_error("factorial overflow");
    double out = 1;
    for (int k = 2; k <= static_cast<int>(v); ++k) out *= k;
    return out;
}

}  // namespace

ExprPtr parse_expression(std::string_view text) { return Parser(text).parse(); }

std::string print(const Expr& e) {
    std::ostringstream os;
    print_into(e, os);
    return os.str();
}

std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> out;
    collect_variables(e, out);
    return out;
}

double evaluate(const Expr& e, const Bindings& bindings, EvalTrace* trace) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Number>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, Variable>) {
                if (auto it = bindings.find(n.name); it != bindings.end()) return it->second;
                if (n.name == "pi") return std::numbers::pi;
                throw Error(Errc::UnboundVariable, "unbound variable '" + n.name + "'");
            } else if constexpr (std::is_same_v<T, Negate>) {
                return -evaluate(*n.operand, bindings, trace);
            } else if constexpr (std::is_same_v<T, Binary>) {
                double a = evaluate(*n.lhs, bindings, trace);
                double b = evaluate(*n.rhs, bindings, trace);
                switch (n.op) {
                    case BinaryOp::Add: return checked(a + b, "addition");
                    case BinaryOp::Sub: return checked(a - b, "subtraction");
                    case BinaryOp::Mul: return checked(a * b, "multiplication");
                    case BinaryOp::Div:
                        if (trace) trace->min_divisor = std::min(trace->min_divisor, std::fabs(b));
                        if (b == 0) domain_error("division by zero");
                        return checked(a / b, "division");
                    case BinaryOp::Pow:
                        if (a == 0 && b < 0) domain_error("zero to a negative power");
                        if (a < 0 && std::floor(b) != b) domain_error("negative base with fractional exponent");
                        if (b < 0 && trace) trace->min_divisor = std::min(trace->min_divisor, std::fabs(a));
                        return checked(std::pow(a, b), "power");
                }
                return 0.0;
            } else {
                double a = evaluate(*n.arg, bindings, trace);
                switch (n.fn) {
                    case Function::Sqrt:
                        if (a < 0) domain_error("square root of a negative value");
                        return std::sqrt(a);
                    case Function::Sin: return checked(std::sin(a), "sin");
                    case Function::Cos: return checked(std::cos(a), "cos");
                    case Function::Tan: {
                        double c = std::cos(a);
                        if (trace) trace->min_divisor = std::min(trace->min_divisor, std::fabs(c));
                        if (c == 0) domain_error("tangent undefined");
                        return checked(std::sin(a) / c, "tan");
                    }
                    case Function::Abs: return std::fabs(a);
                    case Function::Factorial: return factorial_of(a);
                }
                return 0.0;
            }
        },
        e.node());
}

namespace {

std::optional<Rational> exact_impl(const Expr& e) {
    return std::visit(
        [&](const auto& n) -> std::optional<Rational> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Number>) {
                if (!n.exact) throw RationalOverflow{};
                return n.exact;
            } else if constexpr (std::is_same_v<T, Variable>) {
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, Negate>) {
                auto v = exact_impl(*n.operand);
                if (!v) return std::nullopt;
                return -*v;
            } else if constexpr (std::is_same_v<T, Binary>) {
                auto a = exact_impl(*n.lhs);
                if (!a) return std::nullopt;
                auto b = exact_impl(*n.rhs);
                if (!b) return std::nullopt;
                switch (n.op) {
                    case BinaryOp::Add: return *a + *b;
                    case BinaryOp::Sub: return *a - *b;
                    case BinaryOp::Mul: return *a * *b;
                    case BinaryOp::Div:
                        if (b->is_zero()) domain_error("division by zero");
                        return *a / *b;
                    case BinaryOp::Pow:
                        if (!b->is_integer()) return std::nullopt;
                        if (a->is_zero() && b->is_negative()) domain_error("zero to a negative power");
                        if (b->num() > 4096 || b->num() < -4096) throw RationalOverflow{};
                        return a->pow(b->num());
                }
                return std::nullopt;
            } else {
                auto a = exact_impl(*n.arg);
                if (!a) return std::nullopt;
                switch (n.fn) {
                    case Function::Abs: return a->abs();
                    case Function::Sqrt:
                        if (a->is_negative()) domain_error("square root of a negative value");
                        return a->exact_sqrt();
                    case Function::Factorial: {
                        if (!a->is_integer() || a->is_negative())
                            domain_error("factorial of a negative or non-integer value");
                        Rational out(1);
                        for (std::int64_t k = 2; k <= a->num(); ++k) out *= Rational(k);
                        return out;
                    }
                    default: return std::nullopt;
                }
            }
        },
        e.node());
}

}  // namespace

std::optional<Rational> evaluate_exact(const Expr& e, bool* overflowed) {
    if (overflowed) *overflowed = false;
    try {
        return exact_impl(e);
    } catch (const RationalOverflow&) {
        if (overflowed) *overflowed = true;
        return std::nullopt;
    }
}

}  // namespace mega::mathcheck
