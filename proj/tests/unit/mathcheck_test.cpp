#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mega/error.hpp"
#include "mega/mathcheck/answer.hpp"
#include "mega/mathcheck/expr.hpp"
#include "mega/mathcheck/oracle.hpp"
#include "mega/mathcheck/polynomial.hpp"
#include "support/expr_gen.hpp"

using namespace mega;
using namespace mega::mathcheck;

namespace {

ExprPtr num(std::int64_t v) { return Expr::number(Rational(v)); }
ExprPtr var(const char* n) { return Expr::variable(n); }

Problem problem(Category c, std::string statement) {
    Problem p;
    p.category = c;
    p.statement = std::move(statement);
    return p;
}

Errc error_code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return Errc::EmptyInput;
}

}  // namespace

TEST(Rational, NormalisesSignAndTerms) {
    Rational r(6, -8);
    EXPECT_EQ(r.num(), -3);
    EXPECT_EQ(r.den(), 4);
    EXPECT_EQ(Rational(1, 2) + Rational(1, 3), Rational(5, 6));
    EXPECT_EQ(Rational(2, 3).pow(-2), Rational(9, 4));
    EXPECT_EQ(*Rational::from_decimal("0.25"), Rational(1, 4));
    EXPECT_EQ(*Rational::from_decimal(".5"), Rational(1, 2));
    EXPECT_FALSE(Rational::from_decimal("1.2.3"));
}

TEST(Rational, OverflowIsReported) {
    Rational big(std::numeric_limits<std::int64_t>::max() / 2);
    EXPECT_THROW(big * Rational(3), RationalOverflow);
}

TEST(Parse, ImplicitMultiplicationAndPrecedence) {
    ExprPtr e = parse_expression("2x+4");
    ExprPtr expected = Expr::binary(BinaryOp::Add, Expr::binary(BinaryOp::Mul, num(2), var("x")), num(4));
    EXPECT_TRUE(structurally_equal(*e, *expected)) << print(*e);

    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("-x^2"), {{"x", 3}}), -9);
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("2^3^2")), 512);
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("2^-1")), 0.5);
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("2(x+1)"), {{"x", 4}}), 10);
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("6 / 2 * 3")), 9);
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("x^2 \xE2\x88\x92 5x + 6"), {{"x", 2}}), 0);
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("3 \xC3\x97 4")), 12);
}

TEST(Parse, FactorialIsPostfixCall) {
    ExprPtr e = parse_expression("5!");
    EXPECT_TRUE(structurally_equal(*e, *Expr::call(Function::Factorial, num(5))));
    EXPECT_DOUBLE_EQ(evaluate(*e), 120);
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("3!!")), 720);
}

TEST(Parse, ErrorsCarryOffsets) {
    try {
        parse_expression("2*)x");
        FAIL();
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.offset(), 2u);
    }
    try {
        parse_expression("banana");
        FAIL();
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }
    EXPECT_EQ(error_code_of([] { parse_expression("foo(2)"); }), Errc::UnknownFunction);
    EXPECT_THROW(parse_expression(""), SyntaxError);
    EXPECT_THROW(parse_expression("(1+2"), SyntaxError);
    EXPECT_THROW(parse_expression("sin 2"), SyntaxError);
}

TEST(Evaluate, DomainAndBindingErrors) {
    EXPECT_DOUBLE_EQ(evaluate(*parse_expression("2x+4"), {{"x", 3}}), 10);
    EXPECT_EQ(error_code_of([] { evaluate(*parse_expression("sqrt(x)"), {{"x", -1}}); }), Errc::DomainError);
    EXPECT_EQ(error_code_of([] { evaluate(*parse_expression("1/(x-1)"), {{"x", 1}}); }), Errc::DomainError);
    EXPECT_EQ(error_code_of([] { evaluate(*parse_expression("(-3)!")); }), Errc::DomainError);
    EXPECT_EQ(error_code_of([] { evaluate(*parse_expression("2.5!")); }), Errc::DomainError);
    EXPECT_EQ(error_code_of([] { evaluate(*parse_expression("x + 1")); }), Errc::UnboundVariable);
    EXPECT_NEAR(evaluate(*parse_expression("sin(pi/6)")), 0.5, 1e-15);
}

TEST(Evaluate, ExactPath) {
    EXPECT_EQ(*evaluate_exact(*parse_expression("1/3 + 1/6")), Rational(1, 2));
    EXPECT_EQ(*evaluate_exact(*parse_expression("(2/3)^-2")), Rational(9, 4));
    EXPECT_EQ(*evaluate_exact(*parse_expression("sqrt(9/4)")), Rational(3, 2));
    EXPECT_EQ(*evaluate_exact(*parse_expression("10!/8!")), Rational(90));
    EXPECT_FALSE(evaluate_exact(*parse_expression("sqrt(2)")));
    bool overflowed = false;
    EXPECT_FALSE(evaluate_exact(*parse_expression("30!"), &overflowed));
    EXPECT_TRUE(overflowed);
}

TEST(Polynomial, NormalFormDetectsIdentities) {
    auto nf = [](const char* t) { return *to_rational_function(*parse_expression(t)).value; };
    EXPECT_TRUE(nf("(x+1)^2").equals(nf("x^2 + 2x + 1")));
    EXPECT_TRUE(nf("(x^2-1)/(x-1)").equals(nf("x+1")));
    EXPECT_FALSE(nf("(x+1)^2").equals(nf("x^2 + 1")));
    EXPECT_FALSE(to_rational_function(*parse_expression("sin(x)")).value);
}

TEST(Equivalence, ExamplesFromTheContract) {
    EXPECT_TRUE(equivalent(Scalar{parse_expression("1/2")}, Scalar{parse_expression("0.5")}));
    EquivalencePolicy exact;
    exact.mode = EquivalenceMode::Exact;
    EXPECT_TRUE(equivalent(Scalar{parse_expression("1/2")}, Scalar{parse_expression("0.5")}, exact));

    AnswerForm a = make_root_set({num(2), num(3)});
    AnswerForm b = make_root_set({num(3), num(2)});
    EXPECT_TRUE(equivalent(a, b));
    EXPECT_FALSE(equivalent(a, make_root_set({num(2)})));
    EXPECT_FALSE(equivalent(a, make_root_set({num(2), num(4)})));
}

TEST(Equivalence, PythagoreanIdentityUnderNumericPolicy) {
    // Independent check of the identity at the same number of points.
    for (int i = 0; i < 32; ++i) {
        double x = -10 + 20.0 * i / 31;
        ASSERT_NEAR(std::sin(x) * std::sin(x) + std::cos(x) * std::cos(x), 1.0, 1e-15);
    }
    auto r = check_equivalence(Scalar{parse_expression("sin(x)^2+cos(x)^2")}, Scalar{parse_expression("1")}, {});
    EXPECT_TRUE(r.equivalent);
    EXPECT_EQ(r.mode_used, EquivalenceMode::Numeric);
}

TEST(Equivalence, ExactModeDegradesWithFlag) {
    EquivalencePolicy exact;
    exact.mode = EquivalenceMode::Exact;
    auto r = check_equivalence(*parse_expression("sin(x)^2+cos(x)^2"), *parse_expression("1"), exact);
    EXPECT_TRUE(r.equivalent);
    EXPECT_TRUE(r.degraded);

    auto big = check_equivalence(*parse_expression("25!"), *parse_expression("15511210043330985984000000"), exact);
    EXPECT_TRUE(big.equivalent);
    EXPECT_TRUE(big.degraded);

    auto plain = check_equivalence(*parse_expression("(x+1)^2"), *parse_expression("x^2+2x+1"), exact);
    EXPECT_TRUE(plain.equivalent);
    EXPECT_FALSE(plain.degraded);
    EXPECT_EQ(plain.mode_used, EquivalenceMode::Exact);
}

TEST(Equivalence, ShapeMismatchAndSingularities) {
    EXPECT_EQ(error_code_of([] { equivalent(Label{TriangleLabel::Right}, Scalar{parse_expression("1")}); }),
              Errc::IncomparableForms);
    EXPECT_TRUE(equivalent(Scalar{parse_expression("3")}, make_root_set({num(3)})));
    // Removable singularity at x = 1 is resampled.
    EXPECT_TRUE(equivalent(Scalar{parse_expression("(x^2-1)/(x-1)")}, Scalar{parse_expression("x+1")}));
    // Never defined on the sample domain.
    EXPECT_EQ(error_code_of([] { equivalent(Scalar{parse_expression("sqrt(-1-x^2)")}, Scalar{parse_expression("1")}); }),
              Errc::IncomparableForms);
    EquivalencePolicy bad;
    bad.tolerance = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Answers, StudentInputShapes) {
    auto roots = parse_student_answer("x = 2 or x = 3", AnswerKind::RootSet);
    EXPECT_TRUE(equivalent(roots, make_root_set({num(2), num(3)})));
    EXPECT_TRUE(equivalent(parse_student_answer("{3, 2}", AnswerKind::RootSet), roots));
    EXPECT_TRUE(equivalent(parse_student_answer("x=4", AnswerKind::Scalar), Scalar{num(4)}));
    EXPECT_TRUE(equivalent(parse_student_answer("(1, -2)", AnswerKind::Point), Point{num(1), Expr::negate(num(2))}));
    EXPECT_TRUE(equivalent(parse_student_answer("It is a Right triangle.", AnswerKind::Label), Label{TriangleLabel::Right}));
    EXPECT_THROW(parse_student_answer("banana", AnswerKind::Scalar), SyntaxError);
    EXPECT_THROW(parse_student_answer("acute or obtuse", AnswerKind::Label), SyntaxError);
    EXPECT_THROW(parse_student_answer("1, 2, 3", AnswerKind::Point), SyntaxError);
}

TEST(Answers, CanonicalTextRoundTrips) {
    std::vector<AnswerForm> forms{Scalar{parse_expression("sqrt(3)/2")}, make_root_set({num(3), Expr::negate(num(2))}),
                                  Point{parse_expression("1/2"), num(4)}, Label{TriangleLabel::Obtuse}, RootSet{}};
    for (const auto& f : forms) {
        std::string text = format_answer(f);
        AnswerForm back = parse_answer(text);
        EXPECT_EQ(format_answer(back), text);
        if (!std::holds_alternative<RootSet>(f) || !std::get<RootSet>(f).roots.empty())
            EXPECT_TRUE(equivalent(f, back)) << text;
    }
    EXPECT_EQ(format_answer(make_root_set({num(3), num(2)})), "{2, 3}");
}

TEST(Oracle, QuadraticRootsSubstituteBack) {
    // x^2 - 5x + 6 at 2 and 3: 4 - 10 + 6 = 0, 9 - 15 + 6 = 0.
    Problem p = problem(Category::QuadraticEquation, "Solve x^2 \xE2\x88\x92 5x + 6 = 0");
    AnswerForm ans = solve_oracle(p);
    EXPECT_TRUE(equivalent(ans, make_root_set({num(2), num(3)})));
    EXPECT_TRUE(satisfies(p, ans));
}

TEST(Oracle, LinearEquationInProse) {
    Problem p = problem(Category::LinearEquation, "Solve 2x + 4 = 10");
    EXPECT_EQ(format_answer(solve_oracle(p)), "3");
    EXPECT_EQ(format_answer(solve_oracle(problem(Category::LinearEquation, "If 3y - 7 = 11, what is y?"))), "6");
    EXPECT_EQ(format_answer(solve_oracle(problem(Category::LinearEquation, "Solve for x: 4x = 6."))), "3/2");
    EXPECT_EQ(error_code_of([] { solve_oracle(problem(Category::LinearEquation, "0x + 1 = 2")); }),
              Errc::DegenerateProblem);
    EXPECT_EQ(error_code_of([] { solve_oracle(problem(Category::LinearEquation, "x^3 = 8")); }),
              Errc::UnsupportedPattern);
    EXPECT_EQ(error_code_of([] { solve_oracle(problem(Category::LinearEquation, "y = 2x + 1")); }),
              Errc::UnsupportedPattern);
}

TEST(Oracle, QuadraticEdgeCases) {
    auto irr = solve_oracle(problem(Category::QuadraticEquation, "x^2 - 2 = 0"));
    EXPECT_TRUE(equivalent(irr, make_root_set({parse_expression("sqrt(2)"), parse_expression("-sqrt(2)")})));
    auto shifted = solve_oracle(problem(Category::QuadraticEquation, "x^2 - 2x - 1 = 0"));
    EXPECT_TRUE(equivalent(shifted, make_root_set({parse_expression("1+sqrt(2)"), parse_expression("1-sqrt(2)")})));
    auto none = solve_oracle(problem(Category::QuadraticEquation, "x^2 + 1 = 0"));
    EXPECT_TRUE(std::get<RootSet>(none).roots.empty());
    auto dbl = solve_oracle(problem(Category::QuadraticEquation, "x^2 - 4x + 4 = 0"));
    EXPECT_EQ(format_answer(dbl), "{2}");
    EXPECT_EQ(error_code_of([] { solve_oracle(problem(Category::QuadraticEquation, "0x^2 + 2x + 1 = 0")); }),
              Errc::DegenerateProblem);
}

TEST(Oracle, OtherCategories) {
    EXPECT_EQ(format_answer(solve_oracle(problem(Category::Factorial, "Compute 7!"))), "5040");
    EXPECT_EQ(format_answer(solve_oracle(problem(Category::Factorial, "What is the factorial of 6?"))), "720");
    EXPECT_EQ(format_answer(solve_oracle(problem(Category::Factorial, "Evaluate 8!/6!."))), "56");

    EXPECT_EQ(format_answer(solve_oracle(problem(Category::TriangleByAngles, "angles 30, 60, 90"))), "right");
    EXPECT_EQ(format_answer(solve_oracle(problem(Category::TriangleByAngles, "A triangle has angles 50 and 60 degrees."))),
              "acute");
    EXPECT_EQ(error_code_of([] { solve_oracle(problem(Category::TriangleByAngles, "angles 30, 60, 80")); }),
              Errc::DegenerateProblem);

    auto mid = problem(Category::CoordinateGeometry, "Find the midpoint of the segment joining (1, 2) and (5, -4).");
    EXPECT_EQ(format_answer(solve_oracle(mid)), "(3, -1)");
    auto dist = problem(Category::CoordinateGeometry, "Find the distance between the points (1, 2) and (4, 6).");
    EXPECT_EQ(format_answer(solve_oracle(dist)), "5");
    auto surd = problem(Category::CoordinateGeometry, "Find the distance between the points (0, 0) and (2, 4).");
    EXPECT_EQ(format_answer(solve_oracle(surd)), "2*sqrt(5)");
    EXPECT_TRUE(satisfies(surd, solve_oracle(surd)));
    auto slope = problem(Category::CoordinateGeometry, "Find the slope of the line through (1, 1) and (3, 4).");
    EXPECT_EQ(format_answer(solve_oracle(slope)), "3/2");
    EXPECT_EQ(error_code_of([] {
                  solve_oracle(problem(Category::CoordinateGeometry, "Find the slope of the line through (1, 1) and (1, 4)."));
              }),
              Errc::DegenerateProblem);

    EXPECT_EQ(format_answer(solve_oracle(problem(Category::Trigonometry, "Find the exact value of sin(30\xC2\xB0)"))),
              "1/2");
    EXPECT_EQ(format_answer(solve_oracle(problem(Category::Trigonometry, "Evaluate cos(150 degrees)."))),
              "-sqrt(3)/2");
    EXPECT_EQ(error_code_of([] { solve_oracle(problem(Category::Trigonometry, "tan(90)")); }),
              Errc::DegenerateProblem);
    EXPECT_EQ(error_code_of([] { solve_oracle(problem(Category::Trigonometry, "sin(10)")); }),
              Errc::UnsupportedPattern);
}

TEST(Oracle, SpecialAnglesMatchLibm) {
    for (int deg = -360; deg <= 720; deg += 15) {
        if (deg % 30 != 0 && deg % 45 != 0) continue;
        double rad = deg * std::numbers::pi / 180;
        EXPECT_NEAR(evaluate(*special_angle_value(Function::Sin, deg)), std::sin(rad), 1e-12) << deg;
        EXPECT_NEAR(evaluate(*special_angle_value(Function::Cos, deg)), std::cos(rad), 1e-12) << deg;
        if (((deg % 180) + 180) % 180 == 90) continue;
        EXPECT_NEAR(evaluate(*special_angle_value(Function::Tan, deg)), std::tan(rad), 1e-9) << deg;
    }
}

TEST(Properties, PrintReparsesToSameTree) {
    testkit::ExprGenerator gen(42);
    for (int i = 0; i < 500; ++i) {
        std::string text = testkit::text_of(*gen.expr(4));
        ExprPtr e = parse_expression(text);
        ExprPtr again = parse_expression(print(*e));
        ASSERT_TRUE(structurally_equal(*e, *again)) << text << " -> " << print(*e);
    }
}

TEST(Properties, EquivalenceReflexiveSymmetricAndExactImpliesNumeric) {
    testkit::ExprGenerator gen(7);
    EquivalencePolicy numeric;
    EquivalencePolicy exact;
    exact.mode = EquivalenceMode::Exact;
    for (int i = 0; i < 300; ++i) {
        auto base = gen.expr(3);
        ExprPtr a = parse_expression(testkit::text_of(*base));
        ExprPtr b = parse_expression(testkit::text_of(*(i % 2 ? gen.equivalent_rewrite(base) : gen.perturb(base))));
        ASSERT_TRUE(check_equivalence(*a, *a, numeric).equivalent);
        ASSERT_EQ(check_equivalence(*a, *b, numeric).equivalent, check_equivalence(*b, *a, numeric).equivalent);
        if (check_equivalence(*a, *b, exact).equivalent) ASSERT_TRUE(check_equivalence(*a, *b, numeric).equivalent);
    }
}
