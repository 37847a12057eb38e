#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mega/mathcheck/expr.hpp"

namespace mega::mathcheck {

enum class TriangleLabel { Acute, Right, Obtuse };

std::string_view label_name(TriangleLabel label) noexcept;

struct Scalar {
    ExprPtr value;
};

// Unordered, duplicate-free under equivalence. Use make_root_set.
struct RootSet {
    std::vector<ExprPtr> roots;
};

struct Point {
    ExprPtr x;
    ExprPtr y;
};

struct Label {
    TriangleLabel value;
};

using AnswerForm = std::variant<Scalar, RootSet, Point, Label>;

enum class AnswerKind { Scalar, RootSet, Point, Label };

AnswerKind kind_of(const AnswerForm& form) noexcept;
std::string_view kind_name(AnswerKind kind) noexcept;

RootSet make_root_set(std::vector<ExprPtr> roots);

// Canonical text: "3", "{2, 3}", "(1, -2)", "right". Round-trips through
// parse_answer.
std::string format_answer(const AnswerForm& form);

// Parses the canonical text produced by format_answer.
AnswerForm parse_answer(std::string_view text);

// Lenient parse of free-form student input against the expected shape.
// Accepts "x = 3", "x = 2 or x = 3", "2, 3", "(1, 2)", "It is a right
// triangle" and similar. Throws SyntaxError / Error(UnknownFunction) when
// the input is not mathematics.
AnswerForm parse_student_answer(std::string_view text, AnswerKind expected);

enum class EquivalenceMode { Exact, Numeric };

struct EquivalencePolicy {
    EquivalenceMode mode = EquivalenceMode::Numeric;
    int sample_count = 32;
    double tolerance = 1e-9;
    double domain_lo = -10.0;
    double domain_hi = 10.0;
    std::uint64_t seed = 0x6d656761u;

    // Throws std::invalid_argument when tolerance <= 0, sample_count < 1 or
    // the domain is empty.
    void validate() const;
};

struct EquivalenceResult {
    bool equivalent = false;
    EquivalenceMode mode_used = EquivalenceMode::Numeric;
    // Exact mode fell back to sampling: oversized rationals or expressions
    // outside the rational fragment.
    bool degraded = false;
};

// |a - b| <= tolerance * max(1, |a|, |b|).
bool close_enough(double a, double b, double tolerance) noexcept;

EquivalenceResult check_equivalence(const Expr& a, const Expr& b, const EquivalencePolicy& policy);

// Throws Error(IncomparableForms) for mismatched shapes (a Scalar and a
// singleton RootSet are comparable) or when no admissible sample point can be
// found.
EquivalenceResult check_equivalence(const AnswerForm& a, const AnswerForm& b, const EquivalencePolicy& policy);

inline bool equivalent(const AnswerForm& a, const AnswerForm& b, const EquivalencePolicy& policy = {}) {
    return check_equivalence(a, b, policy).equivalent;
}

}  // namespace mega::mathcheck
