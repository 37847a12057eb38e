#include "mega/mathcheck/polynomial.hpp"

#include <algorithm>
#include <stdexcept>

#include "mega/error.hpp"

namespace mega::mathcheck {

namespace {

constexpr std::size_t kMaxTerms = 4096;
constexpr int kMaxDegree = 64;

struct TooLarge {};

}  // namespace

Polynomial::Polynomial(Rational constant) {
    if (!constant.is_zero()) terms_.emplace(Monomial{}, constant);
}

Polynomial Polynomial::variable(const std::string& name) {
    Polynomial p;
    p.terms_.emplace(Monomial{{name, 1}}, Rational(1));
    return p;
}

std::optional<Rational> Polynomial::constant_value() const {
    if (terms_.empty()) return Rational(0);
    if (terms_.size() == 1 && terms_.begin()->first.empty()) return terms_.begin()->second;
    return std::nullopt;
}

int Polynomial::degree() const {
    int best = 0;
    for (const auto& [m, c] : terms_) {
        int d = 0;
        for (const auto& [v, e] : m) d += e;
        best = std::max(best, d);
    }
    return best;
}

int Polynomial::degree_in(const std::string& var) const {
    int best = 0;
    for (const auto& [m, c] : terms_)
        if (auto it = m.find(var); it != m.end()) best = std::max(best, it->second);
    return best;
}

Rational Polynomial::coefficient(const std::string& var, int k) const {
    Monomial key;
    if (k > 0) key.emplace(var, k);
    if (auto it = terms_.find(key); it != terms_.end()) return it->second;
    return Rational(0);
}

std::set<std::string> Polynomial::variables() const {
    std::set<std::string> out;
    for (const auto& [m, c] : terms_)
        for (const auto& [v, e] : m) out.insert(v);
    return out;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
    if (terms_.size() > kMaxTerms) throw TooLarge{};
}

Polynomial Polynomial::operator-() const {
    Polynomial out;
    for (const auto& [m, c] : terms_) out.terms_.emplace(m, -c);
    return out;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    Polynomial out = a;
    for (const auto& [m, c] : b.terms_) out.add_term(m, c);
    return out;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) {
            Monomial m = ma;
            for (const auto& [v, e] : mb) {
                int& slot = m[v];
                slot += e;
                if (slot > kMaxDegree) throw TooLarge{};
            }
            out.add_term(m, ca * cb);
        }
    }
    return out;
}

Polynomial Polynomial::pow(int exponent) const {
    if (exponent < 0) throw std::invalid_argument("negative polynomial exponent");
    if (exponent > kMaxDegree) throw TooLarge{};
    Polynomial out(Rational(1));
    for (int i = 0; i < exponent; ++i) out = out * *this;
    return out;
}

bool RationalFunction::equals(const RationalFunction& other) const {
    return num * other.den == other.num * den;
}

namespace {

std::optional<RationalFunction> convert(const Expr& e) {
    return std::visit(
        [&](const auto& n) -> std::optional<RationalFunction> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Number>) {
                if (!n.exact) throw RationalOverflow{};
                return RationalFunction{Polynomial(*n.exact), Polynomial(Rational(1))};
            } else if constexpr (std::is_same_v<T, Variable>) {
                if (n.name == "pi") return std::nullopt;
                return RationalFunction{Polynomial::variable(n.name), Polynomial(Rational(1))};
            } else if constexpr (std::is_same_v<T, Negate>) {
                auto v = convert(*n.operand);
                if (!v) return std::nullopt;
                return RationalFunction{-v->num, v->den};
            } else if constexpr (std::is_same_v<T, Binary>) {
                auto a = convert(*n.lhs);
                if (!a) return std::nullopt;
                if (n.op == BinaryOp::Pow) {
                    auto k = evaluate_exact(*n.rhs);
                    if (!k || !k->is_integer()) return std::nullopt;
                    std::int64_t exp = k->num();
                    if (exp > kMaxDegree || exp < -kMaxDegree) throw TooLarge{};
                    if (exp >= 0) return RationalFunction{a->num.pow(static_cast<int>(exp)), a->den.pow(static_cast<int>(exp))};
                    if (a->num.is_zero()) throw Error(Errc::DomainError, "zero to a negative power");
                    return RationalFunction{a->den.pow(static_cast<int>(-exp)), a->num.pow(static_cast<int>(-exp))};
                }
                auto b = convert(*n.rhs);
                if (!b) return std::nullopt;
                switch (n.op) {
                    case BinaryOp::Add: return RationalFunction{a->num * b->den + b->num * a->den, a->den * b->den};
                    case BinaryOp::Sub: return RationalFunction{a->num * b->den - b->num * a->den, a->den * b->den};
                    case BinaryOp::Mul: return RationalFunction{a->num * b->num, a->den * b->den};
                    case BinaryOp::Div:
                        if (b->num.is_zero()) throw Error(Errc::DomainError, "division by zero");
                        return RationalFunction{a->num * b->den, a->den * b->num};
                    case BinaryOp::Pow: break;
                }
                return std::nullopt;
            } else {
                // Only constant calls with an exact value stay in the fragment.
                if (!free_variables(*n.arg).empty()) return std::nullopt;
                bool overflowed = false;
                auto v = evaluate_exact(e, &overflowed);
                if (overflowed) throw RationalOverflow{};
                if (!v) return std::nullopt;
                return RationalFunction{Polynomial(*v), Polynomial(Rational(1))};
            }
        },
        e.node());
}

}  // namespace

NormalFormResult to_rational_function(const Expr& e) {
    NormalFormResult out;
    try {
        out.value = convert(e);
    } catch (const RationalOverflow&) {
        out.overflowed = true;
    } catch (const TooLarge&) {
        out.overflowed = true;
    }
    return out;
}

}  // namespace mega::mathcheck
