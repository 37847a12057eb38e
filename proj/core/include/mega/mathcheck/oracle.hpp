#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mega/mathcheck/answer.hpp"
#include "mega/problem.hpp"

namespace mega::mathcheck {

// The mathematical run of characters surrounding byte `anchor` in prose:
// digits, operators, parentheses, single-letter variables and function names.
// Trailing sentence punctuation is dropped.
std::string math_span_around(std::string_view statement, std::size_t anchor);

struct Equation {
    ExprPtr lhs;
    ExprPtr rhs;
    // Free variables of lhs - rhs before simplification.
    std::set<std::string> variables;
};

// Finds the first "lhs = rhs" in a statement. Throws Error(UnsupportedPattern)
// when there is none or it does not parse.
Equation extract_equation(std::string_view statement);

enum class CoordinateTask { Midpoint, Distance, Slope };

struct CoordinateProblem {
    CoordinateTask task;
    Rational x1, y1, x2, y2;
};

// Throws Error(UnsupportedPattern).
CoordinateProblem parse_coordinate_problem(std::string_view statement);

struct TrigProblem {
    Function fn;  // Sin, Cos or Tan
    int degrees;
};

TrigProblem parse_trig_problem(std::string_view statement);

// Two or three interior angles in degrees; a missing third is inferred.
std::vector<Rational> parse_triangle_angles(std::string_view statement);

// Exact value of sin/cos/tan at a multiple of 30 or 45 degrees.
// Throws Error(UnsupportedPattern) for other angles and
// Error(DegenerateProblem) where tan is undefined.
ExprPtr special_angle_value(Function fn, int degrees);

// Answer shape a category produces (coordinate geometry depends on the task).
AnswerKind expected_kind(const Problem& problem);

// Closed-form solution for the six checkable categories. Degree <= 2 only.
// Errors: UnsupportedPattern, DegenerateProblem.
AnswerForm solve_oracle(const Problem& problem);

// Substitutes `answer` back into the statement using floating point and
// reports whether it holds within `tolerance` (relative).
bool satisfies(const Problem& problem, const AnswerForm& answer, double tolerance = 1e-9);

// An exact rational as an expression: integers stay literals, fractions
// become p/q (negated when needed).
ExprPtr rational_expr(const Rational& r);

}  // namespace mega::mathcheck
