#include "mega/mathcheck/mentions.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cmath>
#include <optional>

#include "mega/mathcheck/expr.hpp"

namespace mega::mathcheck {
namespace {

constexpr std::string_view kMaskGlyph = "\xE2\x96\xAE";

struct Value {
    double v = 0;
    std::optional<Rational> q;
};

Value lift(const Value& a, const Value& b, double dv, std::optional<Rational> (*op)(const Rational&, const Rational&)) {
    Value r{dv, std::nullopt};
    if (a.q && b.q) r.q = op(*a.q, *b.q);
    return r;
}

std::optional<Rational> q_add(const Rational& a, const Rational& b) {
    try { return a + b; } catch (const RationalOverflow&) { return std::nullopt; }
}
std::optional<Rational> q_sub(const Rational& a, const Rational& b) {
    try { return a - b; } catch (const RationalOverflow&) { return std::nullopt; }
}
std::optional<Rational> q_mul(const Rational& a, const Rational& b) {
    try { return a * b; } catch (const RationalOverflow&) { return std::nullopt; }
}
std::optional<Rational> q_div(const Rational& a, const Rational& b) {
    try { return a / b; } catch (const RationalOverflow&) { return std::nullopt; }
}

Value add(const Value& a, const Value& b) { return lift(a, b, a.v + b.v, q_add); }
Value sub(const Value& a, const Value& b) { return lift(a, b, a.v - b.v, q_sub); }
Value mul(const Value& a, const Value& b) { return lift(a, b, a.v * b.v, q_mul); }
Value div(const Value& a, const Value& b) { return lift(a, b, a.v / b.v, q_div); }
Value neg(const Value& a) { return Value{-a.v, a.q ? std::optional<Rational>(-*a.q) : std::nullopt}; }

struct Tok {
    enum Kind { Num, LP, RP, Plus, Minus, PlusMinus, Star, Slash, Sqrt, Break } kind;
    std::size_t b;
    std::size_t e;
    Value val;
    int decimals = 0;
    bool decimal = false;
};

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Tok> lex(std::string_view s) {
    std::vector<Tok> out;
    std::size_t i = 0;
    auto starts = [&](std::string_view p) { return s.substr(i, p.size()) == p; };
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        std::size_t b = i;
        if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
            while (i < s.size() && is_digit(s[i])) ++i;
            bool decimal = false;
            if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
                decimal = true;
                ++i;
                while (i < s.size() && is_digit(s[i])) ++i;
            }
            std::string_view lit = s.substr(b, i - b);
            Tok t{Tok::Num, b, i, {}, 0, decimal};
            t.val.v = std::strtod(std::string(lit).c_str(), nullptr);
            t.val.q = Rational::from_decimal(lit);
            if (decimal) t.decimals = static_cast<int>(i - lit.find('.') - b - 1);
            out.push_back(t);
            continue;
        }
        if (is_alpha(c)) {
            while (i < s.size() && is_alpha(s[i])) ++i;
            out.push_back({s.substr(b, i - b) == "sqrt" ? Tok::Sqrt : Tok::Break, b, i, {}});
            continue;
        }
        Tok::Kind k = Tok::Break;
        std::size_t len = 1;
        switch (c) {
            case '(': k = Tok::LP; break;
            case ')': k = Tok::RP; break;
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            default:
                if (starts("\xE2\x88\x92")) k = Tok::Minus, len = 3;
                else if (starts("\xC3\x97") || starts("\xC2\xB7")) k = Tok::Star, len = 2;
                else if (starts("\xE2\x8B\x85")) k = Tok::Star, len = 3;
                else if (starts("\xC3\xB7")) k = Tok::Slash, len = 2;
                else if (starts("\xE2\x88\x9A")) k = Tok::Sqrt, len = 3;
                else if (starts("\xC2\xB1")) k = Tok::PlusMinus, len = 2;
                else if (starts(kMaskGlyph)) len = kMaskGlyph.size();
        }
        i += len;
        out.push_back({k, b, i, {}});
    }
    return out;
}

struct Match {
    std::size_t end;  // token index one past the match
    std::vector<Value> values;
    bool plain = false;  // a single (possibly signed) numeric literal
    bool decimal = false;
    int decimals = 0;
    bool surd = false;
};

class Scanner {
public:
    Scanner(std::string_view text, std::vector<Tok> toks) : s_(text), t_(std::move(toks)) {}

    bool is(std::size_t i, Tok::Kind k) const { return i < t_.size() && t_[i].kind == k; }

    // Whether a '-' token starts a signed number rather than a subtraction.
    bool unary_minus(std::size_t i) const {
        std::size_t p = t_[i].b;
        while (p > 0 && (s_[p - 1] == ' ' || s_[p - 1] == '\t')) --p;
        if (p == 0) return true;
        char c = s_[p - 1];
        if (is_digit(c) || c == ')' || c == '.' || c == '!') return false;
        if (p >= kMaskGlyph.size() && s_.substr(p - kMaskGlyph.size(), kMaskGlyph.size()) == kMaskGlyph) return false;
        if (is_alpha(c)) return p >= 2 && is_alpha(s_[p - 2]);
        return true;
    }

    std::vector<Match> number(std::size_t i) const {
        if (!is(i, Tok::Num)) return {};
        const Tok& t = t_[i];
        return {Match{i + 1, {t.val}, true, t.decimal, t.decimals, false}};
    }

    std::vector<Match> paren_number(std::size_t i) const {
        if (!is(i, Tok::LP)) return {};
        std::size_t j = i + 1;
        bool negative = false;
        if (is(j, Tok::Minus)) negative = true, ++j;
        if (!is(j, Tok::Num) || !is(j + 1, Tok::RP)) return {};
        Value v = negative ? neg(t_[j].val) : t_[j].val;
        return {Match{j + 2, {v}, true, t_[j].decimal, t_[j].decimals, false}};
    }

    std::vector<Match> sqrt_atom(std::size_t i) const {
        if (!is(i, Tok::Sqrt)) return {};
        std::size_t j = i + 1;
        bool paren = is(j, Tok::LP);
        if (paren) ++j;
        if (!is(j, Tok::Num)) return {};
        const Value& r = t_[j].val;
        if (paren && !is(j + 1, Tok::RP)) return {};
        if (r.v < 0) return {};
        Value v{std::sqrt(r.v), r.q ? r.q->exact_sqrt() : std::nullopt};
        return {Match{j + (paren ? 2 : 1), {v}, false, false, 0, true}};
    }

    std::vector<Match> surd(std::size_t i) const {
        std::vector<Match> out = sqrt_atom(i);
        if (is(i, Tok::Num)) {
            std::size_t j = is(i + 1, Tok::Star) ? i + 2 : i + 1;
            for (Match m : sqrt_atom(j)) {
                m.values[0] = mul(t_[i].val, m.values[0]);
                out.push_back(m);
            }
        }
        return out;
    }

    void with_denominator(std::vector<Match>& out, const Match& base) const {
        out.push_back(base);
        if (!is(base.end, Tok::Slash)) return;
        std::vector<Match> dens = number(base.end + 1);
        for (const Match& d : paren_number(base.end + 1)) dens.push_back(d);
        for (const Match& d : dens) {
            if (d.values[0].v == 0) continue;
            Match m = base;
            m.end = d.end;
            m.plain = false;
            for (Value& v : m.values) v = div(v, d.values[0]);
            out.push_back(m);
        }
    }

    std::vector<Match> term(std::size_t i) const {
        std::vector<Match> bases = number(i);
        for (const Match& m : paren_number(i)) bases.push_back(m);
        for (const Match& m : surd(i)) bases.push_back(m);
        if (is(i, Tok::LP)) {
            for (Match m : surd(i + 1)) {
                if (!is(m.end, Tok::RP)) continue;
                m.end += 1;
                bases.push_back(m);
            }
        }
        std::vector<Match> out;
        for (const Match& b : bases) with_denominator(out, b);
        return out;
    }

    std::vector<Match> signed_term(std::size_t i) const {
        if (is(i, Tok::Minus)) {
            if (!unary_minus(i)) return {};
            std::vector<Match> out = term(i + 1);
            for (Match& m : out)
                for (Value& v : m.values) v = neg(v);
            return out;
        }
        return term(i);
    }

    // a + surd, a - surd, a +/- surd, in either order, with at least one surd.
    std::vector<Match> sum(std::size_t i) const {
        std::vector<Match> out;
        for (const Match& a : signed_term(i)) {
            std::size_t op = a.end;
            if (!(is(op, Tok::Plus) || is(op, Tok::Minus) || is(op, Tok::PlusMinus))) continue;
            for (const Match& b : term(op + 1)) {
                if (!a.surd && !b.surd) continue;
                Match m{b.end, {}, false, false, 0, true};
                const Value& x = a.values[0];
                const Value& y = b.values[0];
                if (t_[op].kind != Tok::Minus) m.values.push_back(add(x, y));
                if (t_[op].kind != Tok::Plus) m.values.push_back(sub(x, y));
                out.push_back(m);
            }
        }
        return out;
    }

    std::vector<Match> candidates(std::size_t i) const {
        std::vector<Match> out = signed_term(i);
        for (const Match& m : sum(i)) out.push_back(m);
        if (is(i, Tok::LP)) {
            for (Match m : sum(i + 1)) {
                if (!is(m.end, Tok::RP)) continue;
                m.end += 1;
                with_denominator(out, m);
            }
        }
        return out;
    }

    std::size_t skip_space_back(std::size_t p) const {
        while (p > 0 && (s_[p - 1] == ' ' || s_[p - 1] == '\t')) --p;
        return p;
    }

    std::size_t skip_space_fwd(std::size_t p) const {
        while (p < s_.size() && (s_[p] == ' ' || s_[p] == '\t')) ++p;
        return p;
    }

    bool standalone(std::size_t b, std::size_t e) const {
        if (b > 0) {
            char c = s_[b - 1];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') return false;
        }
        if (e < s_.size()) {
            char c = s_[e];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') return false;
            if (c == '.' && e + 1 < s_.size() && is_digit(s_[e + 1])) return false;
        }
        std::size_t pb = skip_space_back(b);
        if (pb > 0 && (s_[pb - 1] == '^' || s_[pb - 1] == '/')) return false;
        std::size_t pe = skip_space_fwd(e);
        if (pe < s_.size() && (s_[pe] == '^' || s_[pe] == '/' || s_[pe] == '!')) return false;
        return true;
    }

    // A literal preceded by a unary minus renders the negated value; that
    // reading is produced by signed_term from the minus itself.
    bool after_unary_minus(std::size_t i) const { return i > 0 && is(i - 1, Tok::Minus) && unary_minus(i - 1); }

    const std::vector<Tok>& tokens() const { return t_; }

private:
    std::string_view s_;
    std::vector<Tok> t_;
};

struct Target {
    Value value;
    bool terminating = false;
};

bool terminating(const Rational& r) {
    std::int64_t d = r.den();
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    return d == 1;
}

void add_target(std::vector<Target>& out, const Expr& e) {
    Target t;
    try {
        t.value.v = evaluate(e);
    } catch (const std::exception&) {
        return;
    }
    t.value.q = evaluate_exact(e);
    t.terminating = t.value.q && terminating(*t.value.q);
    out.push_back(t);
}

bool value_matches(const Match& m, const Value& v, const Target& t) {
    if (m.plain && m.decimal) {
        if (t.terminating) return v.q && *v.q == *t.value.q;
        if (m.decimals < 2) return false;
        return std::fabs(v.v - t.value.v) < std::pow(10.0, -m.decimals);
    }
    if (v.q && t.value.q) return *v.q == *t.value.q;
    double scale = std::max({1.0, std::fabs(v.v), std::fabs(t.value.v)});
    return std::fabs(v.v - t.value.v) <= 1e-9 * scale;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void label_mentions(std::string_view text, TriangleLabel label, std::vector<Span>& out) {
    std::string hay = lower(text);
    std::string needle(label_name(label));
    for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) {
        std::size_t e = p + needle.size();
        bool left = p == 0 || !std::isalnum(static_cast<unsigned char>(hay[p - 1]));
        bool right = e == hay.size() || !std::isalnum(static_cast<unsigned char>(hay[e]));
        if (left && right) out.push_back({p, e});
    }
}

// "5,040" style digit grouping.
void grouped_mentions(std::string_view s, const std::vector<Target>& targets, std::vector<Span>& out) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_digit(s[i]) || (i > 0 && (is_digit(s[i - 1]) || s[i - 1] == ',' || s[i - 1] == '.'))) continue;
        std::size_t j = i;
        while (j < s.size() && is_digit(s[j])) ++j;
        if (j - i > 3) continue;
        std::string digits(s.substr(i, j - i));
        int groups = 0;
        while (j + 3 < s.size() + 0 && s[j] == ',' && is_digit(s[j + 1]) && is_digit(s[j + 2]) && is_digit(s[j + 3]) &&
               (j + 4 == s.size() || !is_digit(s[j + 4]))) {
            digits.append(s.substr(j + 1, 3));
            j += 4;
            ++groups;
        }
        if (groups == 0) continue;
        if (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) ||
                             (s[j] == '.' && j + 1 < s.size() && is_digit(s[j + 1]))))
            continue;
        auto q = Rational::from_decimal(digits);
        double v = std::strtod(digits.c_str(), nullptr);
        for (const Target& t : targets) {
            bool hit = q && t.value.q ? *q == *t.value.q : std::fabs(v - t.value.v) <= 1e-9 * std::max(1.0, std::fabs(v));
            if (hit) {
                out.push_back({i, j});
                break;
            }
        }
        i = j;
    }
}

}  // namespace

std::vector<Span> find_answer_mentions(std::string_view text, const AnswerForm& answer) {
    std::vector<Span> raw;
    std::vector<Target> targets;
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Scalar>) add_target(targets, *a.value);
            else if constexpr (std::is_same_v<T, RootSet>) {
                for (const auto& r : a.roots) add_target(targets, *r);
            } else if constexpr (std::is_same_v<T, Point>) {
                add_target(targets, *a.x);
                add_target(targets, *a.y);
            } else {
                label_mentions(text, a.value, raw);
            }
        },
        answer);

    if (!targets.empty()) {
        Scanner sc(text, lex(text));
        const auto& toks = sc.tokens();
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (sc.after_unary_minus(i)) continue;
            for (const Match& m : sc.candidates(i)) {
                std::size_t b = toks[i].b;
                std::size_t e = toks[m.end - 1].e;
                if (!sc.standalone(b, e)) continue;
                bool hit = false;
                for (const Value& v : m.values)
                    for (const Target& t : targets) hit = hit || value_matches(m, v, t);
                if (hit) raw.push_back({b, e});
            }
        }
        grouped_mentions(text, targets, raw);
    }

    std::sort(raw.begin(), raw.end(), [](const Span& a, const Span& b) {
        return a.begin != b.begin ? a.begin < b.begin : a.end > b.end;
    });
    std::vector<Span> out;
    for (const Span& s : raw) {
        if (!out.empty() && s.begin < out.back().end) {
            out.back().end = std::max(out.back().end, s.end);
            continue;
        }
        out.push_back(s);
    }
    return out;
}

std::string mask_mentions(std::string_view text, const AnswerForm& answer, std::string_view mask) {
    std::string out;
    std::size_t at = 0;
    for (const Span& s : find_answer_mentions(text, answer)) {
        out.append(text.substr(at, s.begin - at));
        out.append(mask);
        at = s.end;
    }
    out.append(text.substr(at));
    return out;
}

}  // namespace mega::mathcheck
