#include "mega/prompt/prompt_kit.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mega/error.hpp"
#include "mega/hash.hpp"
#include "mega/resources.hpp"

namespace mega::prompt {
namespace {

bool is_name_char(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }

std::string trim_blank_lines(const std::string& s) {
    std::size_t b = 0;
    while (b < s.size() && (s[b] == '\n' || s[b] == '\r')) ++b;
    std::size_t e = s.size();
    while (e > b && (s[e - 1] == '\n' || s[e - 1] == '\r' || s[e - 1] == ' ')) --e;
    return s.substr(b, e - b);
}

}  // namespace

PromptTemplate PromptTemplate::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::MissingTemplateResource, "prompt template not found: " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    PromptTemplate t;
    t.hash_ = sha256_hex(bytes);
    t.version_ = file.stem().string();
    std::string current;
    std::string body;
    bool in_section = false;
    auto flush = [&] {
        if (!in_section) return;
        std::string text = trim_blank_lines(body);
        if (current == "system")
            t.system_ = text;
        else
            t.stubs_[current] = text;
        body.clear();
    };
    std::istringstream lines(bytes);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.size() > 4 && line.rfind("[[", 0) == 0 && line.substr(line.size() - 2) == "]]") {
            flush();
            current = line.substr(2, line.size() - 4);
            in_section = true;
            continue;
        }
        if (!in_section) continue;
        body += line;
        body += '\n';
    }
    flush();
    if (t.system_.empty()) throw Error(Errc::MissingTemplateResource, "prompt template has no system section: " + file.string());
    return t;
}

const PromptTemplate& PromptTemplate::bundled() {
    static const PromptTemplate t = load(resource_path("prompts/mega_v1.prompt"));
    return t;
}

bool PromptTemplate::has_stub(std::string_view name) const { return stubs_.find(name) != stubs_.end(); }

const std::string& PromptTemplate::stub(std::string_view name) const {
    auto it = stubs_.find(name);
    if (it == stubs_.end()) throw Error(Errc::MissingTemplateResource, "prompt template has no stub " + std::string(name));
    return it->second;
}

std::vector<std::string> placeholders(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < text.size() && is_name_char(text[j])) ++j;
        if (j > i + 1 && j < text.size() && text[j] == '}') {
            std::string name(text.substr(i + 1, j - i - 1));
            if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
            i = j;
        }
    }
    return out;
}

std::string PromptTemplate::render(std::string_view stub_name, const Fields& fields) const {
    const std::string& text = stub(stub_name);
    std::string out;
    out.reserve(text.size() + 64);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '{') {
            std::size_t j = i + 1;
            while (j < text.size() && is_name_char(text[j])) ++j;
            if (j > i + 1 && j < text.size() && text[j] == '}') {
                std::string_view name(text.data() + i + 1, j - i - 1);
                auto it = fields.find(name);
                if (it == fields.end()) throw Error(Errc::MissingField, std::string(name));
                out += it->second;
                i = j;
                continue;
            }
        }
        out.push_back(text[i]);
    }
    return out;
}

std::string render_system_prompt() { return PromptTemplate::bundled().system_text(); }

std::vector<ChatMessage> render_turn(tutor::Phase phase, const tutor::Session& session, const PromptTemplate& tmpl) {
    using tutor::Phase;
    const bool open = session.original.category == Category::Unknown;
    Fields fields;
    if (!session.original.statement.empty()) fields["problem_statement"] = session.original.statement;
    fields["category"] = std::string(category_title(session.original.category));
    if (session.analog) fields["analog_statement"] = session.analog->statement;
    if (session.challenge) fields["challenge_statement"] = session.challenge->statement;

    std::vector<ChatMessage> out;
    switch (phase) {
        case Phase::Identification: {
            out.push_back({Role::System, tmpl.system_text(), std::nullopt});
            if (session.image)
                out.push_back({Role::Student, tmpl.render("identification_image", fields), session.image});
            else
                out.push_back({Role::Student, tmpl.render("identification", fields), std::nullopt});
            break;
        }
        case Phase::Reinforcement:
            out.push_back({Role::Student, tmpl.render(open && !session.analog ? "reinforcement_open" : "reinforcement", fields),
                           std::nullopt});
            break;
        case Phase::Challenge:
            out.push_back(
                {Role::Student, tmpl.render(open && !session.challenge ? "challenge_open" : "challenge", fields), std::nullopt});
            break;
        case Phase::RewardReleased:
            out.push_back({Role::Student, tmpl.render("reward", fields), std::nullopt});
            break;
        case Phase::Abandoned:
            throw Error(Errc::IllegalPhase, "abandoned sessions have no turns");
    }
    return out;
}

namespace {

struct Normalizer {
    std::string_view s;
    std::size_t i = 0;

    static bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

    void skip_spaces() {
        while (i < s.size() && s[i] == ' ') ++i;
    }

    // Braced group or a single character argument. Returns false when there
    // is no argument at all.
    bool argument(std::string& raw) {
        std::size_t save = i;
        skip_spaces();
        if (i >= s.size()) {
            i = save;
            return false;
        }
        if (s[i] == '{') {
            int depth = 0;
            std::size_t start = i + 1;
            for (std::size_t j = i; j < s.size(); ++j) {
                if (s[j] == '\\' && j + 1 < s.size()) {
                    ++j;
                    continue;
                }
                if (s[j] == '{') ++depth;
                if (s[j] == '}' && --depth == 0) {
                    raw = std::string(s.substr(start, j - start));
                    i = j + 1;
                    return true;
                }
            }
            i = save;
            return false;
        }
        if (s[i] == '\\' || s[i] == '}') {
            i = save;
            return false;
        }
        raw = std::string(1, s[i]);
        ++i;
        return true;
    }

    static bool simple_exponent(const std::string& e) {
        if (e.empty()) return false;
        if (e.size() == 1) return true;
        for (char c : e)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return true;
    }

    std::string run() {
        std::string out;
        out.reserve(s.size());
        while (i < s.size()) {
            char c = s[i];
            if (c == '$') {
                ++i;
                continue;
            }
            if (c == '^' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '\\')) {
                std::size_t save = i;
                ++i;
                if (s.compare(i, 5, "\\circ") == 0 && (i + 5 >= s.size() || !is_letter(s[i + 5]))) {
                    i += 5;
                    out += "\xC2\xB0";
                    continue;
                }
                std::string raw;
                if (s[i] == '{' && argument(raw)) {
                    std::string inner = Normalizer{raw}.run();
                    if (inner == "\xC2\xB0")
                        out += inner;
                    else if (simple_exponent(inner))
                        out += "^" + inner;
                    else
                        out += "^(" + inner + ")";
                    continue;
                }
                i = save;
                out.push_back(c);
                ++i;
                continue;
            }
            if (c != '\\') {
                out.push_back(c);
                ++i;
                continue;
            }
            if (i + 1 >= s.size()) {
                out.push_back(c);
                ++i;
                continue;
            }
            char n = s[i + 1];
            if (!is_letter(n)) {
                switch (n) {
                    case '(':
                    case ')':
                    case '[':
                    case ']':
                        i += 2;
                        continue;
                    case ',':
                    case ';':
                    case ':':
                    case ' ':
                        out.push_back(' ');
                        i += 2;
                        continue;
                    case '!':
                        i += 2;
                        continue;
                    case '\\':
                        out.push_back('\n');
                        i += 2;
                        continue;
                    case '%':
                        out.push_back(n);
                        i += 2;
                        continue;
                    case '{':
                    case '}':
                    case '$':
                        out.push_back(c);
                        out.push_back(n);
                        i += 2;
                        continue;
                    default:
                        out.push_back(c);
                        ++i;
                        continue;
                }
            }
            std::size_t j = i + 1;
            while (j < s.size() && is_letter(s[j])) ++j;
            std::string name(s.substr(i + 1, j - i - 1));
            i = j;
            command(name, out);
        }
        return out;
    }

    void command(const std::string& name, std::string& out) {
        auto emit_unknown = [&] {
            spdlog::debug("normalize_notation: keeping unknown command \\{}", name);
            out += "\\" + name;
        };
        if (name == "frac" || name == "dfrac" || name == "tfrac") {
            std::size_t save = i;
            std::string a, b;
            if (argument(a) && argument(b)) {
                out += "(" + Normalizer{a}.run() + ")/(" + Normalizer{b}.run() + ")";
                return;
            }
            i = save;
            emit_unknown();
            return;
        }
        if (name == "sqrt") {
            std::size_t save = i;
            skip_spaces();
            std::string a;
            if (i < s.size() && s[i] != '[' && argument(a)) {
                out += "sqrt(" + Normalizer{a}.run() + ")";
                return;
            }
            i = save;
            emit_unknown();
            return;
        }
        if (name == "text" || name == "mathrm" || name == "textbf" || name == "mathbf" || name == "textit" ||
            name == "mathit" || name == "operatorname") {
            std::size_t save = i;
            std::string a;
            if (i < s.size() && s[i] == '{' && argument(a)) {
                out += Normalizer{a}.run();
                return;
            }
            i = save;
            emit_unknown();
            return;
        }
        if (name == "left" || name == "right") {
            if (i < s.size() && s[i] == '.') ++i;
            return;
        }
        static const std::map<std::string, std::string, std::less<>> simple{
            {"cdot", "*"},   {"times", "*"}, {"div", "/"},     {"pi", "pi"},     {"sin", "sin"},  {"cos", "cos"},
            {"tan", "tan"},  {"pm", "\xC2\xB1"}, {"circ", "\xC2\xB0"}, {"degree", "\xC2\xB0"}, {"le", "<="},
            {"leq", "<="},   {"ge", ">="},   {"geq", ">="},    {"ne", "!="},     {"neq", "!="},   {"quad", " "},
            {"qquad", " "},  {"cdots", "..."}, {"ldots", "..."}, {"dots", "..."},
        };
        auto it = simple.find(name);
        if (it == simple.end()) {
            emit_unknown();
            return;
        }
        out += it->second;
    }
};

}  // namespace

std::string normalize_notation(std::string_view text) {
    std::string cur = Normalizer{text}.run();
    for (;;) {
        std::string next = Normalizer{cur}.run();
        if (next == cur) return cur;
        cur = std::move(next);
    }
}

}  // namespace mega::prompt
