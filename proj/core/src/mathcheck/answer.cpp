#include "mega/mathcheck/answer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mega/error.hpp"
#include "mega/mathcheck/polynomial.hpp"

namespace mega::mathcheck {

std::string_view label_name(TriangleLabel label) noexcept {
    switch (label) {
        case TriangleLabel::Acute: return "acute";
        case TriangleLabel::Right: return "right";
        case TriangleLabel::Obtuse: return "obtuse";
    }
    return "?";
}

AnswerKind kind_of(const AnswerForm& form) noexcept { return static_cast<AnswerKind>(form.index()); }

std::string_view kind_name(AnswerKind kind) noexcept {
    switch (kind) {
        case AnswerKind::Scalar: return "scalar";
        case AnswerKind::RootSet: return "roots";
        case AnswerKind::Point: return "point";
        case AnswerKind::Label: return "label";
    }
    return "?";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Splits on commas and semicolons outside parentheses.
std::vector<std::string_view> split_top_level(std::string_view s) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '(') ++depth;
        else if (c == ')') --depth;
        else if ((c == ',' || c == ';') && depth == 0) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    parts.push_back(trim(s.substr(start)));
    return parts;
}

// Splits on the words "or" / "and" as separators.
std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> parts;
    std::string current;
    std::size_t i = 0;
    auto word_at = [&](std::size_t pos, std::string_view word) {
        if (s.substr(pos, word.size()) != word) return false;
        bool left = pos == 0 || std::isspace(static_cast<unsigned char>(s[pos - 1]));
        std::size_t end = pos + word.size();
        bool right = end == s.size() || std::isspace(static_cast<unsigned char>(s[end]));
        return left && right;
    };
    while (i < s.size()) {
        if (word_at(i, "or") || word_at(i, "and")) {
            parts.emplace_back(trim(current));
            current.clear();
            i += s[i] == 'o' ? 2 : 3;
            continue;
        }
        current.push_back(s[i++]);
    }
    parts.emplace_back(trim(current));
    return parts;
}

// Removes a leading "x =" / "y=" binding.
std::string_view strip_binding(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && std::isalpha(static_cast<unsigned char>(s[0]))) {
        std::size_t i = 1;
        while (i < s.size() && s[i] == ' ') ++i;
        if (i < s.size() && s[i] == '=') return trim(s.substr(i + 1));
    }
    return s;
}

std::string_view strip_trailing_period(std::string_view s) {
    s = trim(s);
    while (!s.empty() && s.back() == '.') s.remove_suffix(1);
    return trim(s);
}

std::optional<TriangleLabel> label_from_word(std::string_view w) {
    if (w == "acute") return TriangleLabel::Acute;
    if (w == "right") return TriangleLabel::Right;
    if (w == "obtuse") return TriangleLabel::Obtuse;
    return std::nullopt;
}

double sort_key(const ExprPtr& e) {
    try {
        return evaluate(*e);
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

class Sampler {
public:
    explicit Sampler(const EquivalencePolicy& p) : rng_(p.seed), lo_(p.domain_lo), hi_(p.domain_hi) {}

    double next() {
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return lo_ + (hi_ - lo_) * u;
    }

private:
    std::mt19937_64 rng_;
    double lo_;
    double hi_;
};

constexpr double kSingularDivisor = 1e-6;
constexpr int kMaxResamples = 100;

EquivalenceResult numeric_equivalence(const Expr& a, const Expr& b, const EquivalencePolicy& policy) {
    EquivalenceResult result;
    result.mode_used = EquivalenceMode::Numeric;
    std::set<std::string> vars = free_variables(a);
    for (const auto& v : free_variables(b)) vars.insert(v);

    if (vars.empty()) {
        try {
            EvalTrace ta, tb;
            double va = evaluate(a, {}, &ta);
            double vb = evaluate(b, {}, &tb);
            result.equivalent = close_enough(va, vb, policy.tolerance);
        } catch (const Error& e) {
            if (e.code() != Errc::DomainError) throw;
            throw Error(Errc::IncomparableForms, std::string("undefined value: ") + e.what());
        }
        return result;
    }

    Sampler sampler(policy);
    for (int s = 0; s < policy.sample_count; ++s) {
        bool accepted = false;
        for (int attempt = 0; attempt <= kMaxResamples && !accepted; ++attempt) {
            Bindings bindings;
            for (const auto& v : vars) bindings[v] = sampler.next();
            EvalTrace ta, tb;
            double va = 0, vb = 0;
            try {
                va = evaluate(a, bindings, &ta);
                vb = evaluate(b, bindings, &tb);
            } catch (const Error& e) {
                if (e.code() != Errc::DomainError) throw;
                continue;
            }
            if (ta.min_divisor < kSingularDivisor || tb.min_divisor < kSingularDivisor) continue;
            accepted = true;
            if (!close_enough(va, vb, policy.tolerance)) return result;
        }
        if (!accepted) throw Error(Errc::IncomparableForms, "no admissible sample point after resampling");
    }
    result.equivalent = true;
    return result;
}

}  // namespace

RootSet make_root_set(std::vector<ExprPtr> roots) {
    EquivalencePolicy policy;
    RootSet out;
    for (auto& r : roots) {
        bool duplicate = false;
        for (const auto& kept : out.roots) {
            try {
                if (check_equivalence(*r, *kept, policy).equivalent) {
                    duplicate = true;
                    break;
                }
            } catch (const Error&) {
            }
        }
        if (!duplicate) out.roots.push_back(std::move(r));
    }
    std::stable_sort(out.roots.begin(), out.roots.end(),
                     [](const ExprPtr& l, const ExprPtr& r) { return sort_key(l) < sort_key(r); });
    return out;
}

std::string format_answer(const AnswerForm& form) {
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Scalar>) {
                return print(*f.value);
            } else if constexpr (std::is_same_v<T, RootSet>) {
                std::string out = "{";
                for (std::size_t i = 0; i < f.roots.size(); ++i) {
                    if (i) out += ", ";
                    out += print(*f.roots[i]);
                }
                return out + "}";
            } else if constexpr (std::is_same_v<T, Point>) {
                return "(" + print(*f.x) + ", " + print(*f.y) + ")";
            } else {
                return std::string(label_name(f.value));
            }
        },
        form);
}

AnswerForm parse_answer(std::string_view text) {
    text = trim(text);
    if (auto label = label_from_word(lower(text))) return Label{*label};
    if (text.size() >= 2 && text.front() == '{' && text.back() == '}') {
        std::string_view inner = trim(text.substr(1, text.size() - 2));
        std::vector<ExprPtr> roots;
        if (!inner.empty())
            for (auto part : split_top_level(inner)) roots.push_back(parse_expression(part));
        return make_root_set(std::move(roots));
    }
    if (text.size() >= 2 && text.front() == '(' && text.back() == ')') {
        auto parts = split_top_level(text.substr(1, text.size() - 2));
        if (parts.size() == 2) return Point{parse_expression(parts[0]), parse_expression(parts[1])};
    }
    return Scalar{parse_expression(text)};
}

AnswerForm parse_student_answer(std::string_view raw, AnswerKind expected) {
    std::string_view text = strip_trailing_period(raw);
    switch (expected) {
        case AnswerKind::Label: {
            std::string l = lower(text);
            std::optional<TriangleLabel> found;
            std::string word;
            auto flush = [&]() {
                if (auto lab = label_from_word(word)) {
                    if (found && *found != *lab) throw SyntaxError(0, "conflicting triangle labels");
                    found = lab;
                }
                word.clear();
            };
            for (char c : l) {
                if (std::isalpha(static_cast<unsigned char>(c))) word.push_back(c);
                else flush();
            }
            flush();
            if (!found) throw SyntaxError(0, "expected acute, right or obtuse");
            return Label{*found};
        }
        case AnswerKind::RootSet: {
            std::string l = lower(text);
            if (l == "none" || l == "no real roots" || l == "no real solutions" || l == "{}")
                return RootSet{};
            std::string_view body = text;
            if (body.size() >= 2 && body.front() == '{' && body.back() == '}') body = body.substr(1, body.size() - 2);
            std::vector<ExprPtr> roots;
            for (auto part : split_top_level(body)) {
                for (const auto& piece : split_words(part)) {
                    std::string_view p = strip_binding(piece);
                    if (p.empty()) throw SyntaxError(0, "empty root");
                    roots.push_back(parse_expression(p));
                }
            }
            return make_root_set(std::move(roots));
        }
        case AnswerKind::Point: {
            std::string_view body = text;
            if (body.size() >= 2 && body.front() == '(' && body.back() == ')') {
                auto inner = split_top_level(body.substr(1, body.size() - 2));
                if (inner.size() == 2) body = body.substr(1, body.size() - 2);
            }
            auto parts = split_top_level(body);
            if (parts.size() != 2) throw SyntaxError(0, "expected a point (x, y)");
            return Point{parse_expression(strip_binding(parts[0])), parse_expression(strip_binding(parts[1]))};
        }
        case AnswerKind::Scalar:
            return Scalar{parse_expression(strip_binding(text))};
    }
    throw SyntaxError(0, "unsupported answer kind");
}

void EquivalencePolicy::validate() const {
    if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
    if (sample_count < 1) throw std::invalid_argument("sample_count must be at least 1");
    if (!(domain_hi > domain_lo)) throw std::invalid_argument("empty sample domain");
}

bool close_enough(double a, double b, double tolerance) noexcept {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= tolerance * scale;
}

EquivalenceResult check_equivalence(const Expr& a, const Expr& b, const EquivalencePolicy& policy) {
    policy.validate();
    if (policy.mode == EquivalenceMode::Exact) {
        NormalFormResult na = to_rational_function(a);
        NormalFormResult nb = to_rational_function(b);
        if (na.value && nb.value) {
            try {
                EquivalenceResult r;
                r.mode_used = EquivalenceMode::Exact;
                r.equivalent = na.value->equals(*nb.value);
                return r;
            } catch (const RationalOverflow&) {
            }
        }
        EquivalenceResult r = numeric_equivalence(a, b, policy);
        r.degraded = true;
        return r;
    }
    return numeric_equivalence(a, b, policy);
}

EquivalenceResult check_equivalence(const AnswerForm& a, const AnswerForm& b, const EquivalencePolicy& policy) {
    auto as_roots = [](const AnswerForm& f) -> std::optional<std::vector<ExprPtr>> {
        if (const auto* s = std::get_if<Scalar>(&f)) return std::vector<ExprPtr>{s->value};
        if (const auto* r = std::get_if<RootSet>(&f)) return r->roots;
        return std::nullopt;
    };

    if (const auto* la = std::get_if<Label>(&a)) {
        const auto* lb = std::get_if<Label>(&b);
        if (!lb) throw Error(Errc::IncomparableForms, "label compared with a non-label");
        return EquivalenceResult{la->value == lb->value, policy.mode, false};
    }
    if (const auto* pa = std::get_if<Point>(&a)) {
        const auto* pb = std::get_if<Point>(&b);
        if (!pb) throw Error(Errc::IncomparableForms, "point compared with a non-point");
        EquivalenceResult rx = check_equivalence(*pa->x, *pb->x, policy);
        if (!rx.equivalent) return rx;
        EquivalenceResult ry = check_equivalence(*pa->y, *pb->y, policy);
        ry.degraded = ry.degraded || rx.degraded;
        return ry;
    }
    if (std::holds_alternative<Point>(b) || std::holds_alternative<Label>(b))
        throw Error(Errc::IncomparableForms, "incompatible answer shapes");

    auto ra = *as_roots(a);
    auto rb = *as_roots(b);
    EquivalenceResult out;
    out.mode_used = policy.mode;
    if (ra.size() != rb.size()) return out;
    std::vector<bool> used(rb.size(), false);
    for (const auto& x : ra) {
        bool matched = false;
        for (std::size_t j = 0; j < rb.size() && !matched; ++j) {
            if (used[j]) continue;
            EquivalenceResult r = check_equivalence(*x, *rb[j], policy);
            out.degraded = out.degraded || r.degraded;
            if (r.equivalent) {
                used[j] = true;
                matched = true;
                out.mode_used = r.mode_used;
            }
        }
        if (!matched) return out;
    }
    out.equivalent = true;
    return out;
}

}  // namespace mega::mathcheck
