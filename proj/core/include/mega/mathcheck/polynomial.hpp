#pragma once

#include <map>
#include <optional>
#include <string>

#include "mega/mathcheck/expr.hpp"
#include "mega/mathcheck/rational.hpp"

namespace mega::mathcheck {

// Variable name -> exponent (always positive).
using Monomial = std::map<std::string, int>;

// Multivariate polynomial over the rationals in canonical (sparse, sorted,
// zero-free) form. Two polynomials are equal iff their term maps are equal.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(Rational constant);
    static Polynomial variable(const std::string& name);

    const std::map<Monomial, Rational>& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    std::optional<Rational> constant_value() const;
    int degree() const;
    // Degree in `var`; 0 when absent.
    int degree_in(const std::string& var) const;
    // Coefficient of var^k for a univariate polynomial in `var`.
    Rational coefficient(const std::string& var, int k) const;
    std::set<std::string> variables() const;

    Polynomial operator-() const;
    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    Polynomial pow(int exponent) const;

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

    std::size_t term_count() const noexcept { return terms_.size(); }

private:
    void add_term(const Monomial& m, const Rational& c);
    std::map<Monomial, Rational> terms_;
};

// num / den with den != 0. Not reduced; equality is by cross multiplication.
struct RationalFunction {
    Polynomial num;
    Polynomial den{Rational(1)};

    bool equals(const RationalFunction& other) const;
};

struct NormalFormResult {
    std::optional<RationalFunction> value;
    // True when the expression was inside the rational fragment but exact
    // arithmetic overflowed or grew past the size limits.
    bool overflowed = false;
};

// Converts an expression built from rational literals, variables, + - * /
// and integer powers into a rational function. Anything else (sqrt of a
// non-square, trig, pi, inexact literals) yields an empty value.
NormalFormResult to_rational_function(const Expr& e);

}  // namespace mega::mathcheck
