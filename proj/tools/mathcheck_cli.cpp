#include <CLI11.hpp>

#include <iostream>

#include "mega/bank/problem_bank.hpp"
#include "mega/error.hpp"
#include "mega/mathcheck/answer.hpp"
#include "mega/mathcheck/expr.hpp"
#include "mega/mathcheck/oracle.hpp"

// mathcheck eq "<a>" "<b>" [--mode exact|numeric] [--tol T]
// mathcheck solve "<statement>"
// Exit codes: 0 equivalent / solved, 1 not equivalent, 2 error.
int main(int argc, char** argv) {
    using namespace mega;
    CLI::App app{"Symbolic and numeric answer checking"};
    app.require_subcommand(1);

    std::string a, b, mode = "numeric";
    double tol = 1e-9;
    auto* eq = app.add_subcommand("eq", "Exit 0 when two expressions are equivalent");
    eq->add_option("a", a)->required();
    eq->add_option("b", b)->required();
    eq->add_option("--mode", mode)->check(CLI::IsMember({"exact", "numeric"}));
    eq->add_option("--tol", tol)->check(CLI::PositiveNumber);

    std::string statement;
    auto* solve = app.add_subcommand("solve", "Print the reference answer for a problem statement");
    solve->add_option("statement", statement)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*eq) {
            mathcheck::EquivalencePolicy policy;
            policy.mode = mode == "exact" ? mathcheck::EquivalenceMode::Exact : mathcheck::EquivalenceMode::Numeric;
            policy.tolerance = tol;
            policy.validate();
            auto result = mathcheck::check_equivalence(*mathcheck::parse_expression(a), *mathcheck::parse_expression(b), policy);
            std::cout << (result.equivalent ? "equivalent" : "not equivalent")
                      << (result.degraded ? " (numeric fallback)" : "") << '\n';
            return result.equivalent ? 0 : 1;
        }
        Problem p;
        p.statement = statement;
        p.category = bank::classify(statement);
        if (p.category == Category::Unknown) {
            std::cerr << "unsupported problem category\n";
            return 2;
        }
        std::cout << category_id(p.category) << ": " << mathcheck::format_answer(mathcheck::solve_oracle(p)) << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
