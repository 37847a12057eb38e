#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mega::mathcheck {

// Raised when an exact operation would not fit in 64-bit numerator or
// denominator. Callers fall back to floating point and record the fact.
class RationalOverflow : public std::overflow_error {
public:
    RationalOverflow() : std::overflow_error("rational overflow") {}
};

// Exact rational number in lowest terms with a positive denominator.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(implicit)
    Rational(std::int64_t num, std::int64_t den);

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }

    bool is_integer() const noexcept { return den_ == 1; }
    bool is_zero() const noexcept { return num_ == 0; }
    bool is_negative() const noexcept { return num_ < 0; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational operator-() const;
    Rational abs() const;
    Rational reciprocal() const;
    // Integer power; negative exponents invert.
    Rational pow(std::int64_t exponent) const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) noexcept = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

    // "3", "-1/2".
    std::string to_string() const;

    // Parses an unsigned decimal literal such as "12", "0.25" or ".5".
    static std::optional<Rational> from_decimal(std::string_view literal);

    // Exact square root when both numerator and denominator are perfect squares.
    std::optional<Rational> exact_sqrt() const;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

}  // namespace mega::mathcheck
