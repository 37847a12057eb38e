#include "mega/mathcheck/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <regex>

#include "mega/error.hpp"
#include "mega/mathcheck/polynomial.hpp"

namespace mega::mathcheck {

namespace {

[[noreturn]] void unsupported(const std::string& what) { throw Error(Errc::UnsupportedPattern, what); }
[[noreturn]] void degenerate(const std::string& what) { throw Error(Errc::DegenerateProblem, what); }

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<bool> math_mask(std::string_view s) {
    std::vector<bool> mask(s.size(), false);
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (is_alpha(c)) {
            std::size_t start = i;
            while (i < s.size() && is_alpha(s[i])) ++i;
            std::string word(s.substr(start, i - start));
            bool mathy = word.size() == 1 || function_from_name(word).has_value() || word == "pi";
            for (std::size_t k = start; k < i; ++k) mask[k] = mathy;
            continue;
        }
        if ((c >= '0' && c <= '9') || std::string_view("+-*/^!().= ").find(c) != std::string_view::npos) {
            mask[i] = true;
            ++i;
            continue;
        }
        auto starts = [&](std::string_view seq) { return s.substr(i, seq.size()) == seq; };
        if (starts("\xE2\x88\x92")) {
            mask[i] = mask[i + 1] = mask[i + 2] = true;
            i += 3;
            continue;
        }
        if (starts("\xC3\x97") || starts("\xC3\xB7") || starts("\xC2\xB7")) {
            mask[i] = mask[i + 1] = true;
            i += 2;
            continue;
        }
        ++i;
    }
    return mask;
}

std::string trim_span(std::string span) {
    auto strip = [&]() {
        while (!span.empty() && (span.back() == ' ' || span.back() == '.' || span.back() == ',')) span.pop_back();
        while (!span.empty() && span.front() == ' ') span.erase(span.begin());
    };
    strip();
    // Drop unbalanced parentheses at the edges.
    for (bool changed = true; changed;) {
        changed = false;
        int depth = 0;
        int min_depth = 0;
        for (char c : span) {
            if (c == '(') ++depth;
            if (c == ')') --depth;
            min_depth = std::min(min_depth, depth);
        }
        if (depth > 0 && !span.empty() && span.front() == '(') {
            span.erase(span.begin());
            changed = true;
        } else if (min_depth < 0 && !span.empty() && span.back() == ')') {
            span.pop_back();
            changed = true;
        }
        strip();
    }
    return span;
}

Rational parse_signed_decimal(const std::string& text) {
    bool negative = !text.empty() && text.front() == '-';
    auto r = Rational::from_decimal(negative ? text.substr(1) : text);
    if (!r) unsupported("number out of range: " + text);
    return negative ? -*r : *r;
}

// sqrt(value) for a non-negative rational as an expression, simplified to
// c*sqrt(m) with m square-free where feasible.
ExprPtr sqrt_expr(const Rational& value) {
    if (auto exact = value.exact_sqrt()) return rational_expr(*exact);
    // sqrt(p/q) = sqrt(p*q)/q
    std::int64_t n = checked_mul(value.num(), value.den());
    std::int64_t k = 1;
    std::int64_t m = n;
    if (n < 1'000'000'000'000LL) {
        for (std::int64_t f = 2; f * f <= m; ++f) {
            while (m % (f * f) == 0) {
                m /= f * f;
                k *= f;
            }
        }
    }
    Rational coeff(k, value.den());
    ExprPtr root = Expr::call(Function::Sqrt, Expr::number(Rational(m)));
    if (coeff == Rational(1)) return root;
    if (coeff.is_integer()) return Expr::binary(BinaryOp::Mul, Expr::number(coeff), root);
    ExprPtr scaled = coeff.num() == 1 ? root : Expr::binary(BinaryOp::Mul, Expr::number(Rational(coeff.num())), root);
    return Expr::binary(BinaryOp::Div, scaled, Expr::number(Rational(coeff.den())));
}

AnswerForm solve_equation(const Problem& problem) {
    Equation eq = extract_equation(problem.statement);
    if (eq.variables.size() != 1) unsupported("expected an equation in one variable");
    const std::string var = *eq.variables.begin();

    NormalFormResult nf = to_rational_function(*Expr::binary(BinaryOp::Sub, eq.lhs, eq.rhs));
    if (nf.overflowed) unsupported("coefficients out of range");
    if (!nf.value) unsupported("equation is not polynomial");
    auto den = nf.value->den.constant_value();
    if (!den) unsupported("variable in a denominator");

    try {
        const Polynomial& poly = nf.value->num;
        if (!poly.variables().empty() && poly.variables() != std::set<std::string>{var})
            unsupported("expected an equation in one variable");
        int degree = poly.degree_in(var);
        if (degree > 2) unsupported("degree above two");
        if (degree == 0) degenerate("no variable term");
        if (problem.category == Category::QuadraticEquation && degree < 2) degenerate("zero leading coefficient");

        Rational c0 = poly.coefficient(var, 0);
        Rational c1 = poly.coefficient(var, 1);
        if (degree == 1) return Scalar{rational_expr(-c0 / c1)};

        Rational a = poly.coefficient(var, 2);
        Rational disc = c1 * c1 - Rational(4) * a * c0;
        if (disc.is_negative()) return RootSet{};
        Rational two_a = Rational(2) * a;
        if (disc.is_zero()) return make_root_set({rational_expr(-c1 / two_a)});
        if (auto s = disc.exact_sqrt())
            return make_root_set({rational_expr((-c1 + *s) / two_a), rational_expr((-c1 - *s) / two_a)});

        Rational center = -c1 / two_a;
        // sqrt(disc) / |2a|
        ExprPtr spread = sqrt_expr(disc / (two_a * two_a));
        if (center.is_zero()) return make_root_set({Expr::negate(spread), spread});
        ExprPtr c = rational_expr(center);
        return make_root_set(
            {Expr::binary(BinaryOp::Sub, c, spread), Expr::binary(BinaryOp::Add, c, spread)});
    } catch (const RationalOverflow&) {
        unsupported("coefficients out of range");
    }
}

AnswerForm solve_coordinate(const Problem& problem) {
    CoordinateProblem cp = parse_coordinate_problem(problem.statement);
    try {
        Rational dx = cp.x2 - cp.x1;
        Rational dy = cp.y2 - cp.y1;
        switch (cp.task) {
            case CoordinateTask::Midpoint:
                return Point{rational_expr((cp.x1 + cp.x2) / Rational(2)), rational_expr((cp.y1 + cp.y2) / Rational(2))};
            case CoordinateTask::Distance:
                return Scalar{sqrt_expr(dx * dx + dy * dy)};
            case CoordinateTask::Slope:
                if (dx.is_zero()) degenerate("vertical line has no slope");
                return Scalar{rational_expr(dy / dx)};
        }
    } catch (const RationalOverflow&) {
        unsupported("coordinates out of range");
    }
    unsupported("unknown coordinate task");
}

std::optional<std::size_t> factorial_anchor(std::string_view s) {
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] != '!') continue;
        char p = s[i - 1];
        if ((p >= '0' && p <= '9') || p == ')' || p == '!') return i;
    }
    return std::nullopt;
}

ExprPtr factorial_expression(std::string_view statement) {
    if (auto anchor = factorial_anchor(statement)) {
        std::string span = math_span_around(statement, *anchor);
        try {
            return parse_expression(span);
        } catch (const Error&) {
            unsupported("cannot parse factorial expression '" + span + "'");
        }
    }
    static const std::regex kWords(R"(factorial of\s+(\d+))", std::regex::icase);
    std::smatch m;
    std::string text(statement);
    if (std::regex_search(text, m, kWords))
        return Expr::call(Function::Factorial, Expr::number(parse_signed_decimal(m[1].str())));
    unsupported("no factorial expression found");
}

AnswerForm solve_factorial(const Problem& problem) {
    ExprPtr e = factorial_expression(problem.statement);
    if (!free_variables(*e).empty()) unsupported("factorial expression has variables");
    bool overflowed = false;
    try {
        auto v = evaluate_exact(*e, &overflowed);
        if (v) return Scalar{rational_expr(*v)};
        if (overflowed) {
            // Too large for exact arithmetic; keep the expression itself and
            // let comparisons fall back to sampling.
            evaluate(*e);
            return Scalar{e};
        }
        return Scalar{Expr::inexact(evaluate(*e))};
    } catch (const Error& err) {
        if (err.code() == Errc::DomainError) degenerate(err.what());
        throw;
    }
}

AnswerForm solve_triangle(const Problem& problem) {
    std::vector<Rational> angles = parse_triangle_angles(problem.statement);
    Rational largest = *std::max_element(angles.begin(), angles.end());
    if (largest > Rational(90)) return Label{TriangleLabel::Obtuse};
    if (largest == Rational(90)) return Label{TriangleLabel::Right};
    return Label{TriangleLabel::Acute};
}

}  // namespace

ExprPtr rational_expr(const Rational& r) {
    if (r.is_integer()) {
        if (r.is_negative()) return Expr::negate(Expr::number(-r));
        return Expr::number(r);
    }
    ExprPtr num = Expr::number(Rational(r.abs().num()));
    return Expr::binary(BinaryOp::Div, r.is_negative() ? Expr::negate(num) : num, Expr::number(Rational(r.den())));
}

std::string math_span_around(std::string_view statement, std::size_t anchor) {
    if (anchor >= statement.size()) return {};
    std::vector<bool> mask = math_mask(statement);
    if (!mask[anchor]) return {};
    std::size_t lo = anchor;
    std::size_t hi = anchor;
    while (lo > 0 && mask[lo - 1]) --lo;
    while (hi + 1 < statement.size() && mask[hi + 1]) ++hi;
    return trim_span(std::string(statement.substr(lo, hi - lo + 1)));
}

Equation extract_equation(std::string_view statement) {
    std::size_t eq = statement.find('=');
    if (eq == std::string_view::npos) unsupported("no equation found");
    std::string span = math_span_around(statement, eq);
    std::size_t split = span.find('=');
    if (split == std::string::npos || span.find('=', split + 1) != std::string::npos)
        unsupported("expected exactly one '=' in '" + span + "'");
    Equation out;
    try {
        out.lhs = parse_expression(span.substr(0, split));
        out.rhs = parse_expression(span.substr(split + 1));
    } catch (const Error& e) {
        unsupported(std::string("cannot parse equation: ") + e.what());
    }
    out.variables = free_variables(*out.lhs);
    for (const auto& v : free_variables(*out.rhs)) out.variables.insert(v);
    return out;
}

CoordinateProblem parse_coordinate_problem(std::string_view statement) {
    std::string text = lower(statement);
    CoordinateProblem cp{};
    if (text.find("midpoint") != std::string::npos) cp.task = CoordinateTask::Midpoint;
    else if (text.find("distance") != std::string::npos) cp.task = CoordinateTask::Distance;
    else if (text.find("slope") != std::string::npos || text.find("gradient") != std::string::npos)
        cp.task = CoordinateTask::Slope;
    else unsupported("unrecognised coordinate geometry task");

    static const std::regex kPoint(R"(\(\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\))");
    std::vector<std::pair<Rational, Rational>> points;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kPoint); it != std::sregex_iterator(); ++it)
        points.emplace_back(parse_signed_decimal((*it)[1].str()), parse_signed_decimal((*it)[2].str()));
    if (points.size() < 2) unsupported("expected two points");
    cp.x1 = points[0].first;
    cp.y1 = points[0].second;
    cp.x2 = points[1].first;
    cp.y2 = points[1].second;
    return cp;
}

TrigProblem parse_trig_problem(std::string_view statement) {
    static const std::regex kTrig(R"((sin|cos|tan)\s*\(?\s*(-?\d+))");
    std::string text = lower(statement);
    std::smatch m;
    if (!std::regex_search(text, m, kTrig)) unsupported("no trigonometric evaluation found");
    TrigProblem tp{};
    tp.fn = *function_from_name(m[1].str());
    try {
        tp.degrees = std::stoi(m[2].str());
    } catch (const std::exception&) {
        unsupported("angle out of range");
    }
    return tp;
}

std::vector<Rational> parse_triangle_angles(std::string_view statement) {
    static const std::regex kNumber(R"(\d+(?:\.\d+)?)");
    std::string text(statement);
    std::vector<Rational> angles;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumber); it != std::sregex_iterator(); ++it)
        angles.push_back(parse_signed_decimal(it->str()));
    if (angles.size() == 2) angles.push_back(Rational(180) - angles[0] - angles[1]);
    if (angles.size() != 3) unsupported("expected two or three angles");
    for (const auto& a : angles)
        if (!(a > Rational(0))) degenerate("angles must be positive");
    if (angles[0] + angles[1] + angles[2] != Rational(180)) degenerate("angles do not sum to 180 degrees");
    return angles;
}

ExprPtr special_angle_value(Function fn, int degrees) {
    int theta = ((degrees % 360) + 360) % 360;
    if (theta % 30 != 0 && theta % 45 != 0) unsupported("not a special angle");
    if (fn == Function::Cos) return special_angle_value(Function::Sin, theta + 90);

    int quadrant = theta / 90;  // 0..3, boundaries folded below
    int ref = theta % 180;
    if (ref > 90) ref = 180 - ref;

    if (fn == Function::Sin) {
        bool negative = theta > 180;
        const char* table = nullptr;
        switch (ref) {
            case 0: table = "0"; break;
            case 30: table = "1/2"; break;
            case 45: table = "sqrt(2)/2"; break;
            case 60: table = "sqrt(3)/2"; break;
            case 90: table = "1"; break;
            default: unsupported("not a special angle");
        }
        return parse_expression(negative && ref != 0 ? "-" + std::string(table) : std::string(table));
    }
    if (fn == Function::Tan) {
        if (ref == 90) degenerate("tangent undefined at this angle");
        const char* table = nullptr;
        switch (ref) {
            case 0: table = "0"; break;
            case 30: table = "sqrt(3)/3"; break;
            case 45: table = "1"; break;
            case 60: table = "sqrt(3)"; break;
            default: unsupported("not a special angle");
        }
        bool negative = quadrant == 1 || quadrant == 3;
        return parse_expression(negative && ref != 0 ? "-" + std::string(table) : std::string(table));
    }
    unsupported("expected sin, cos or tan");
}

AnswerKind expected_kind(const Problem& problem) {
    switch (problem.category) {
        case Category::QuadraticEquation: return AnswerKind::RootSet;
        case Category::TriangleByAngles: return AnswerKind::Label;
        case Category::CoordinateGeometry:
            try {
                return parse_coordinate_problem(problem.statement).task == CoordinateTask::Midpoint ? AnswerKind::Point
                                                                                                   : AnswerKind::Scalar;
            } catch (const Error&) {
                return AnswerKind::Scalar;
            }
        default: return AnswerKind::Scalar;
    }
}

AnswerForm solve_oracle(const Problem& problem) {
    switch (problem.category) {
        case Category::LinearEquation:
        case Category::QuadraticEquation: return solve_equation(problem);
        case Category::CoordinateGeometry: return solve_coordinate(problem);
        case Category::Factorial: return solve_factorial(problem);
        case Category::TriangleByAngles: return solve_triangle(problem);
        case Category::Trigonometry: {
            TrigProblem tp = parse_trig_problem(problem.statement);
            return Scalar{special_angle_value(tp.fn, tp.degrees)};
        }
        case Category::Unknown: break;
    }
    unsupported("category has no oracle");
}

bool satisfies(const Problem& problem, const AnswerForm& answer, double tolerance) {
    try {
        switch (problem.category) {
            case Category::LinearEquation:
            case Category::QuadraticEquation: {
                Equation eq = extract_equation(problem.statement);
                if (eq.variables.size() != 1) return false;
                std::vector<ExprPtr> roots;
                if (const auto* s = std::get_if<Scalar>(&answer)) roots.push_back(s->value);
                else if (const auto* r = std::get_if<RootSet>(&answer)) roots = r->roots;
                else return false;
                // Substitution cannot confirm an empty root set.
                if (roots.empty()) return false;
                for (const auto& root : roots) {
                    Bindings b{{*eq.variables.begin(), evaluate(*root)}};
                    if (!close_enough(evaluate(*eq.lhs, b), evaluate(*eq.rhs, b), tolerance)) return false;
                }
                return true;
            }
            case Category::CoordinateGeometry: {
                CoordinateProblem cp = parse_coordinate_problem(problem.statement);
                double x1 = cp.x1.to_double(), y1 = cp.y1.to_double();
                double x2 = cp.x2.to_double(), y2 = cp.y2.to_double();
                if (cp.task == CoordinateTask::Midpoint) {
                    const auto* p = std::get_if<Point>(&answer);
                    return p && close_enough(evaluate(*p->x), (x1 + x2) / 2, tolerance) &&
                           close_enough(evaluate(*p->y), (y1 + y2) / 2, tolerance);
                }
                const auto* s = std::get_if<Scalar>(&answer);
                if (!s) return false;
                double expected = cp.task == CoordinateTask::Distance ? std::hypot(x2 - x1, y2 - y1)
                                                                      : (y2 - y1) / (x2 - x1);
                return close_enough(evaluate(*s->value), expected, tolerance);
            }
            case Category::Factorial: {
                const auto* s = std::get_if<Scalar>(&answer);
                return s && close_enough(evaluate(*s->value), evaluate(*factorial_expression(problem.statement)), tolerance);
            }
            case Category::TriangleByAngles: {
                const auto* l = std::get_if<Label>(&answer);
                if (!l) return false;
                std::vector<Rational> angles = parse_triangle_angles(problem.statement);
                double largest = 0;
                for (const auto& a : angles) largest = std::max(largest, a.to_double());
                TriangleLabel expected = largest > 90 ? TriangleLabel::Obtuse
                                         : largest == 90 ? TriangleLabel::Right
                                                         : TriangleLabel::Acute;
                return l->value == expected;
            }
            case Category::Trigonometry: {
                const auto* s = std::get_if<Scalar>(&answer);
                if (!s) return false;
                TrigProblem tp = parse_trig_problem(problem.statement);
                double rad = tp.degrees * std::numbers::pi / 180.0;
                double expected = tp.fn == Function::Sin ? std::sin(rad)
                                  : tp.fn == Function::Cos ? std::cos(rad)
                                                           : std::tan(rad);
                return close_enough(evaluate(*s->value), expected, tolerance);
            }
            case Category::Unknown: return false;
        }
    } catch (const Error&) {
        return false;
    }
    return false;
}

}  // namespace mega::mathcheck
