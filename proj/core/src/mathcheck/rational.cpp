#include "mega/mathcheck/rational.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace mega::mathcheck {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw RationalOverflow{};
    return out;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw RationalOverflow{};
    return out;
}

namespace {

std::int64_t checked_neg(std::int64_t a) {
    if (a == std::numeric_limits<std::int64_t>::min()) throw RationalOverflow{};
    return -a;
}

std::optional<std::int64_t> isqrt_exact(std::int64_t v) {
    if (v < 0) return std::nullopt;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(v)));
    for (std::int64_t c = (r > 1 ? r - 1 : 0); c <= r + 1; ++c) {
        std::int64_t sq = 0;
        if (__builtin_mul_overflow(c, c, &sq)) break;
        if (sq == v) return c;
    }
    return std::nullopt;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("zero denominator");
    if (den < 0) {
        num = checked_neg(num);
        den = checked_neg(den);
    }
    std::int64_t g = std::gcd(num, den);
    if (g == 0) g = 1;
    num_ = num / g;
    den_ = den / g;
}

Rational Rational::operator-() const { return Rational(checked_neg(num_), den_); }

Rational Rational::abs() const { return num_ < 0 ? -*this : *this; }

Rational Rational::reciprocal() const {
    if (num_ == 0) throw std::domain_error("division by zero");
    return Rational(den_, num_);
}

Rational Rational::pow(std::int64_t exponent) const {
    if (exponent < 0) return reciprocal().pow(checked_neg(exponent));
    Rational result(1);
    Rational base = *this;
    while (exponent > 0) {
        if (exponent & 1) result *= base;
        exponent >>= 1;
        if (exponent > 0) base *= base;
    }
    return result;
}

Rational operator+(const Rational& a, const Rational& b) {
    std::int64_t g = std::gcd(a.den_, b.den_);
    std::int64_t lhs = checked_mul(a.num_, b.den_ / g);
    std::int64_t rhs = checked_mul(b.num_, a.den_ / g);
    return Rational(checked_add(lhs, rhs), checked_mul(a.den_ / g, b.den_));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
    std::int64_t g1 = std::gcd(a.num_, b.den_);
    std::int64_t g2 = std::gcd(b.num_, a.den_);
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return Rational(checked_mul(a.num_ / g1, b.num_ / g2), checked_mul(a.den_ / g2, b.den_ / g1));
}

Rational operator/(const Rational& a, const Rational& b) { return a * b.reciprocal(); }

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __extension__ using i128 = __int128;
    i128 lhs = static_cast<i128>(a.num_) * b.den_;
    i128 rhs = static_cast<i128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

std::optional<Rational> Rational::from_decimal(std::string_view literal) {
    if (literal.empty()) return std::nullopt;
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool seen_point = false;
    bool seen_digit = false;
    try {
        for (char c : literal) {
            if (c == '.') {
                if (seen_point) return std::nullopt;
                seen_point = true;
                continue;
            }
            if (c < '0' || c > '9') return std::nullopt;
            seen_digit = true;
            num = checked_add(checked_mul(num, 10), c - '0');
            if (seen_point) den = checked_mul(den, 10);
        }
    } catch (const RationalOverflow&) {
        return std::nullopt;
    }
    if (!seen_digit) return std::nullopt;
    return Rational(num, den);
}

std::optional<Rational> Rational::exact_sqrt() const {
    auto n = isqrt_exact(num_);
    auto d = isqrt_exact(den_);
    if (!n || !d) return std::nullopt;
    return Rational(*n, *d);
}

}  // namespace mega::mathcheck
