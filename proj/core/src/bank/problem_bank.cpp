#include "mega/bank/problem_bank.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <random>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mega/error.hpp"
#include "mega/mathcheck/mentions.hpp"
#include "mega/mathcheck/oracle.hpp"
#include "mega/mathcheck/polynomial.hpp"
#include "mega/resources.hpp"

namespace mega::bank {

using mathcheck::AnswerForm;
using mathcheck::CoordinateTask;
using mathcheck::Function;
using mathcheck::Rational;
using mathcheck::TriangleLabel;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string squash_spaces(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

bool contains(std::string_view hay, std::string_view needle) { return hay.find(needle) != std::string_view::npos; }

bool has_word(const std::string& text, std::string_view word) {
    for (std::size_t p = text.find(word); p != std::string::npos; p = text.find(word, p + 1)) {
        std::size_t e = p + word.size();
        bool left = p == 0 || !std::isalpha(static_cast<unsigned char>(text[p - 1]));
        bool right = e >= text.size() || !std::isalpha(static_cast<unsigned char>(text[e]));
        if (left && right) return true;
    }
    return false;
}

bool has_factorial(const std::string& text) {
    for (std::size_t i = 1; i < text.size(); ++i) {
        if (text[i] != '!') continue;
        char p = text[i - 1];
        if (std::isdigit(static_cast<unsigned char>(p)) || p == ')') return true;
    }
    return has_word(text, "factorial");
}

bool has_square(const std::string& text) {
    static const std::regex kSquare(R"([a-z]\s*(\^\s*\(?\s*2|\xC2\xB2))");
    return std::regex_search(text, kSquare) || has_word(text, "squared");
}

// Degree of a single-variable polynomial equation, or -1.
int equation_degree(std::string_view statement) {
    if (!contains(statement, "=")) return -1;
    try {
        mathcheck::Equation eq = mathcheck::extract_equation(statement);
        if (eq.variables.size() != 1) return -1;
        auto nf = mathcheck::to_rational_function(*mathcheck::Expr::binary(mathcheck::BinaryOp::Sub, eq.lhs, eq.rhs));
        if (!nf.value || !nf.value->den.constant_value()) return -1;
        return nf.value->num.degree_in(*eq.variables.begin());
    } catch (const std::exception&) {
        return -1;
    }
}

bool has_ordered_pair(const std::string& text) {
    static const std::regex kPair(R"(\(\s*-?\d+(\.\d+)?\s*,\s*-?\d+(\.\d+)?\s*\))");
    return std::regex_search(text, kPair);
}

// Deterministic on every platform: mt19937_64 output is fully specified, and
// range reduction is done here rather than by a library distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    int between(int lo, int hi) {
        if (hi < lo) std::swap(lo, hi);
        std::uint64_t span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t x = 0;
        do {
            x = eng_();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

    int nonzero(int lo, int hi) {
        for (;;) {
            int v = between(lo, hi);
            if (v != 0) return v;
        }
    }

    bool coin() { return between(0, 1) == 1; }

    template <class T>
    const T& pick(const std::vector<T>& items) {
        return items[static_cast<std::size_t>(between(0, static_cast<int>(items.size()) - 1))];
    }

private:
    std::mt19937_64 eng_;
};

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct Source {
    Category category;
    std::string family;
    std::string statement;
    std::optional<AnswerForm> reference;
    std::string variable = "x";
    int factorial_n = 0;
    Function trig_fn = Function::Sin;
    int triangle_angles_given = 3;
};

std::optional<AnswerForm> reference_of(const Problem& p) {
    if (p.reference) return p.reference;
    try {
        return mathcheck::solve_oracle(p);
    } catch (const Error&) {
        return std::nullopt;
    }
}

Source read_source(const Problem& original) {
    if (original.category == Category::Unknown) throw Error(Errc::UnsupportedCategory, "no templates for unknown category");
    Source src;
    src.category = original.category;
    src.statement = squash_spaces(original.statement);
    src.reference = reference_of(original);
    switch (original.category) {
        case Category::LinearEquation:
            src.family = "linear";
            try {
                auto eq = mathcheck::extract_equation(original.statement);
                if (eq.variables.size() == 1) src.variable = *eq.variables.begin();
            } catch (const Error&) {
            }
            break;
        case Category::QuadraticEquation: src.family = "quadratic"; break;
        case Category::CoordinateGeometry: {
            CoordinateTask task = CoordinateTask::Midpoint;
            try {
                task = mathcheck::parse_coordinate_problem(original.statement).task;
            } catch (const Error&) {
            }
            src.family = task == CoordinateTask::Midpoint ? "coordinate_midpoint"
                         : task == CoordinateTask::Distance ? "coordinate_distance"
                                                            : "coordinate_slope";
            break;
        }
        case Category::Factorial: src.family = contains(original.statement, "/") ? "factorial_ratio" : "factorial"; break;
        case Category::TriangleByAngles: {
            src.family = "triangle";
            static const std::regex kNumber(R"(\d+(?:\.\d+)?)");
            std::string text(original.statement);
            auto n = std::distance(std::sregex_iterator(text.begin(), text.end(), kNumber), std::sregex_iterator());
            src.triangle_angles_given = n == 2 ? 2 : 3;
            break;
        }
        case Category::Trigonometry:
            src.family = "trigonometry";
            try {
                src.trig_fn = mathcheck::parse_trig_problem(original.statement).fn;
            } catch (const Error&) {
            }
            break;
        case Category::Unknown: break;
    }
    return src;
}

std::string signed_term(std::int64_t coeff, const std::string& var, bool leading) {
    if (coeff == 0) return {};
    std::string out;
    std::int64_t mag = coeff < 0 ? -coeff : coeff;
    if (leading) out = coeff < 0 ? "-" : "";
    else out = coeff < 0 ? " - " : " + ";
    if (mag != 1 || var.empty()) out += std::to_string(mag);
    out += var;
    return out;
}

std::string pair(int x, int y) { return "(" + std::to_string(x) + ", " + std::to_string(y) + ")"; }

struct Draft {
    std::string statement;
    std::map<std::string, Rational> params;
};

Draft draft_linear(Rng& rng, bool simple, ParamRange range, const std::string& v) {
    int a, b, r;
    if (simple) {
        a = rng.between(2, 5);
        b = rng.between(1, 9);
        r = rng.between(1, 6);
    } else {
        a = rng.nonzero(range.lo, range.hi);
        b = rng.nonzero(range.lo, range.hi);
        r = rng.between(range.lo, range.hi);
    }
    int c = a * r + b;
    std::string eq = signed_term(a, v, true) + signed_term(b, "", false) + " = " + std::to_string(c);
    std::string statement;
    switch (rng.between(0, 2)) {
        case 0: statement = "Solve " + eq; break;
        case 1: statement = "Solve for " + v + ": " + eq; break;
        default: statement = "Find " + v + " if " + eq + "."; break;
    }
    return {statement, {{"a", a}, {"b", b}, {"c", c}}};
}

Draft draft_quadratic(Rng& rng, bool simple, ParamRange range) {
    int a = 1, r1, r2;
    if (simple) {
        do {
            r1 = rng.between(-6, 6);
            r2 = rng.between(-6, 6);
        } while (r1 == 0 && r2 == 0);
    } else {
        a = rng.between(1, 3);
        if (range.lo < 0 && rng.between(0, 3) == 0) a = -a;
        r1 = rng.between(range.lo, range.hi);
        r2 = rng.between(range.lo, range.hi);
    }
    int b = -a * (r1 + r2);
    int c = a * r1 * r2;
    std::string lead = signed_term(a, "x^2", true);
    std::string eq;
    if (c != 0 && rng.coin()) eq = lead + signed_term(b, "x", false) + " = " + std::to_string(-c);
    else eq = lead + signed_term(b, "x", false) + signed_term(c, "", false) + " = 0";
    std::string statement = rng.coin() ? "Solve " + eq : "Find all real solutions of " + eq + ".";
    return {statement, {{"a", a}, {"b", b}, {"c", c}}};
}

Draft draft_coordinate(Rng& rng, bool simple, ParamRange range, const std::string& family) {
    int x1, y1, x2, y2;
    if (family == "coordinate_distance") {
        x1 = rng.between(simple ? -5 : range.lo, simple ? 5 : range.hi);
        y1 = rng.between(simple ? -5 : range.lo, simple ? 5 : range.hi);
        if (simple) {
            static const std::vector<std::pair<int, int>> kTriples{{3, 4}, {4, 3}, {6, 8}, {8, 6}, {5, 12}, {12, 5}};
            auto [dx, dy] = rng.pick(kTriples);
            x2 = x1 + (rng.coin() ? dx : -dx);
            y2 = y1 + (rng.coin() ? dy : -dy);
        } else {
            do {
                x2 = rng.between(range.lo, range.hi);
                y2 = rng.between(range.lo, range.hi);
            } while (x2 == x1 && y2 == y1);
        }
        return {"Find the distance between the points " + pair(x1, y1) + " and " + pair(x2, y2) + ".",
                {{"x1", x1}, {"y1", y1}, {"x2", x2}, {"y2", y2}}};
    }
    if (family == "coordinate_slope") {
        x1 = rng.between(simple ? -5 : range.lo, simple ? 5 : range.hi);
        y1 = rng.between(simple ? -5 : range.lo, simple ? 5 : range.hi);
        if (simple) {
            int dx = rng.between(1, 4);
            x2 = x1 + dx;
            y2 = y1 + dx * rng.between(-3, 3);
        } else {
            do {
                x2 = rng.between(range.lo, range.hi);
            } while (x2 == x1);
            y2 = rng.between(range.lo, range.hi);
        }
        return {"Find the slope of the line through " + pair(x1, y1) + " and " + pair(x2, y2) + ".",
                {{"x1", x1}, {"y1", y1}, {"x2", x2}, {"y2", y2}}};
    }
    x1 = rng.between(simple ? -6 : range.lo, simple ? 6 : range.hi);
    y1 = rng.between(simple ? -6 : range.lo, simple ? 6 : range.hi);
    do {
        x2 = rng.between(simple ? -6 : range.lo, simple ? 6 : range.hi);
        y2 = rng.between(simple ? -6 : range.lo, simple ? 6 : range.hi);
    } while ((x1 == x2 && y1 == y2) || (simple && ((x1 + x2) % 2 != 0 || (y1 + y2) % 2 != 0)));
    return {"Find the midpoint of the segment joining " + pair(x1, y1) + " and " + pair(x2, y2) + ".",
            {{"x1", x1}, {"y1", y1}, {"x2", x2}, {"y2", y2}}};
}

Draft draft_factorial(Rng& rng, bool simple, const std::string& family) {
    if (family == "factorial_ratio") {
        int n = simple ? rng.between(5, 8) : rng.between(7, 12);
        int m = n - (simple ? rng.between(1, 2) : rng.between(2, 3));
        return {"Evaluate " + std::to_string(n) + "!/" + std::to_string(m) + "!.", {{"n", n}, {"m", m}}};
    }
    int n = simple ? rng.between(3, 6) : rng.between(5, 10);
    std::string statement = rng.coin() ? "Compute " + std::to_string(n) + "!" : "Evaluate " + std::to_string(n) + "!.";
    return {statement, {{"n", n}}};
}

std::array<int, 3> triangle_angles(Rng& rng, bool simple, TriangleLabel label) {
    int step = simple ? 10 : 1;
    auto multiple = [&](int lo, int hi) { return rng.between(lo / step, hi / step) * step; };
    for (;;) {
        int a = 0, b = 0;
        switch (label) {
            case TriangleLabel::Right:
                a = 90;
                b = multiple(20, 70);
                break;
            case TriangleLabel::Acute:
                a = multiple(40, 85);
                b = multiple(40, 85);
                break;
            case TriangleLabel::Obtuse:
                a = multiple(100, 150);
                b = multiple(10, 170 - a);
                break;
        }
        int c = 180 - a - b;
        if (c <= 0 || b <= 0) continue;
        if (label == TriangleLabel::Acute && c >= 90) continue;
        std::array<int, 3> angles{a, b, c};
        for (int i = 2; i > 0; --i) std::swap(angles[static_cast<std::size_t>(i)], angles[static_cast<std::size_t>(rng.between(0, i))]);
        return angles;
    }
}

Draft draft_triangle(Rng& rng, bool simple, int given, const std::optional<AnswerForm>& avoid) {
    std::vector<TriangleLabel> labels;
    for (TriangleLabel l : {TriangleLabel::Acute, TriangleLabel::Right, TriangleLabel::Obtuse}) {
        const auto* lab = avoid ? std::get_if<mathcheck::Label>(&*avoid) : nullptr;
        if (!lab || lab->value != l) labels.push_back(l);
    }
    auto angles = triangle_angles(rng, simple, rng.pick(labels));
    auto deg = [](int a) { return std::to_string(a) + "\xC2\xB0"; };
    std::string statement;
    if (given == 2)
        statement = "Two angles of a triangle measure " + deg(angles[0]) + " and " + deg(angles[1]) +
                    ". Classify the triangle by its angles.";
    else
        statement = "A triangle has angles of " + deg(angles[0]) + ", " + deg(angles[1]) + " and " + deg(angles[2]) +
                    ". Classify the triangle by its angles.";
    return {statement, {{"A", angles[0]}, {"B", angles[1]}, {"C", angles[2]}}};
}

Draft draft_trig(Rng& rng, bool simple, Function fn) {
    std::vector<int> angles;
    if (simple) angles = {30, 45, 60};
    else {
        for (int d = 0; d < 360; d += 15)
            if (d % 30 == 0 || d % 45 == 0) angles.push_back(d);
    }
    int d = 0;
    do {
        d = rng.pick(angles);
    } while (fn == Function::Tan && d % 180 == 90);
    std::string name = fn == Function::Sin ? "sin" : fn == Function::Cos ? "cos" : "tan";
    std::string arg = name + "(" + std::to_string(d) + "\xC2\xB0)";
    std::string statement = rng.coin() ? "Find the exact value of " + arg + "." : "Evaluate " + arg + " exactly.";
    return {statement, {{"degrees", d}}};
}

bool same_answer(const AnswerForm& a, const AnswerForm& b) {
    try {
        return mathcheck::equivalent(a, b);
    } catch (const Error&) {
        return false;
    }
}

constexpr int kMaxAttempts = 2000;

Problem generate(const Problem& original, const GenerationSpec& spec, Difficulty difficulty, std::uint64_t salt,
                 const Problem* avoid) {
    Source src = read_source(original);
    if (spec.range.lo > spec.range.hi || spec.range.hi - spec.range.lo < 4)
        throw std::invalid_argument("parameter range must span at least five integers");
    std::uint64_t seed = splitmix(splitmix(spec.seed ^ salt) ^ fnv1a(src.statement));
    Rng rng(seed);
    bool simple = difficulty == Difficulty::Simpler;
    std::string avoid_statement = avoid ? squash_spaces(avoid->statement) : std::string();

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Draft d;
        switch (src.category) {
            case Category::LinearEquation: d = draft_linear(rng, simple, spec.range, src.variable); break;
            case Category::QuadraticEquation: d = draft_quadratic(rng, simple, spec.range); break;
            case Category::CoordinateGeometry: d = draft_coordinate(rng, simple, spec.range, src.family); break;
            case Category::Factorial: d = draft_factorial(rng, simple, src.family); break;
            case Category::TriangleByAngles: d = draft_triangle(rng, simple, src.triangle_angles_given, src.reference); break;
            case Category::Trigonometry: d = draft_trig(rng, simple, src.trig_fn); break;
            case Category::Unknown: throw Error(Errc::UnsupportedCategory, "no templates for unknown category");
        }
        std::string norm = squash_spaces(d.statement);
        if (norm == src.statement || norm == avoid_statement) continue;
        if (classify(d.statement) != src.category) continue;

        Problem p;
        p.statement = d.statement;
        p.category = src.category;
        p.params = std::move(d.params);
        p.source = ProblemSource::Generated;
        AnswerForm ref;
        try {
            ref = mathcheck::solve_oracle(p);
        } catch (const Error&) {
            continue;
        }
        if (auto* roots = std::get_if<mathcheck::RootSet>(&ref); roots && roots->roots.empty()) continue;
        if (!mathcheck::satisfies(p, ref)) continue;
        if (src.reference) {
            if (same_answer(ref, *src.reference)) continue;
            if (!mathcheck::find_answer_mentions(p.statement, *src.reference).empty()) continue;
        }
        if (avoid && avoid->reference && same_answer(ref, *avoid->reference)) continue;
        p.reference = std::move(ref);
        return p;
    }
    throw Error(Errc::DegenerateProblem, "could not generate a distinct problem for: " + src.statement);
}

constexpr std::uint64_t kAnalogSalt = 0x616e616c6f67ULL;
constexpr std::uint64_t kChallengeSalt = 0x6368616c6c656eULL;

}  // namespace

Category classify(std::string_view statement) {
    std::string text = lower(statement);
    if (has_factorial(text)) return Category::Factorial;

    int degree = equation_degree(statement);
    bool quad_words = has_word(text, "quadratic") || has_word(text, "roots") || has_word(text, "solve");
    if (degree == 2 || (has_square(text) && (contains(text, "=") || quad_words))) return Category::QuadraticEquation;
    if (degree == 0 || degree == 1) return Category::LinearEquation;

    for (std::string_view w : {"midpoint", "slope", "gradient", "distance", "point", "points", "axis", "coordinate",
                               "coordinates", "segment", "intercept"})
        if (has_word(text, w)) return Category::CoordinateGeometry;
    if (has_ordered_pair(text)) return Category::CoordinateGeometry;

    if (contains(text, "triangle") && contains(text, "angle")) return Category::TriangleByAngles;

    for (std::string_view w : {"sin", "cos", "tan", "sine", "cosine", "tangent"})
        if (has_word(text, w)) return Category::Trigonometry;
    return Category::Unknown;
}

std::string template_family(const Problem& problem) { return read_source(problem).family; }

Problem generate_analog(const Problem& original, const GenerationSpec& spec) {
    return generate(original, spec, spec.difficulty, kAnalogSalt, nullptr);
}

Problem generate_challenge(const Problem& original, const GenerationSpec& spec) {
    Problem analog = generate_analog(original, spec);
    return generate(original, spec, Difficulty::Matched, kChallengeSalt, &analog);
}

std::vector<GoldenProblem> load_golden_set(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(Errc::DatasetParseError, "cannot open " + file.string());
    std::vector<GoldenProblem> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (squash_spaces(line).empty()) continue;
        auto fail = [&](const std::string& why) {
            throw Error(Errc::DatasetParseError, file.filename().string() + " line " + std::to_string(lineno) + ": " + why);
        };
        try {
            auto j = nlohmann::json::parse(line);
            GoldenProblem g;
            g.id = j.at("id").get<std::string>();
            auto cat = category_from_id(j.at("category").get<std::string>());
            if (!cat || *cat == Category::Unknown) fail("unknown category");
            g.problem.category = *cat;
            g.problem.statement = j.at("statement").get<std::string>();
            g.problem.reference = mathcheck::parse_answer(j.at("reference").get<std::string>());
            g.problem.source = ProblemSource::UserText;
            std::filesystem::path image = j.at("image_path").get<std::string>();
            g.image_path = image.is_absolute() ? image : file.parent_path() / image;
            out.push_back(std::move(g));
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        } catch (const SyntaxError& e) {
            fail(std::string("bad reference: ") + e.what());
        }
    }
    return out;
}

const std::vector<GoldenProblem>& bundled_golden_set() {
    static const std::vector<GoldenProblem> set = load_golden_set(data_path("golden/golden_set.jsonl"));
    return set;
}

std::vector<Problem> golden_set(Category category) {
    std::vector<Problem> out;
    if (category == Category::Unknown) return out;
    for (const auto& g : bundled_golden_set())
        if (g.problem.category == category) out.push_back(g.problem);
    return out;
}

}  // namespace mega::bank
