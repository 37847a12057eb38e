#include "mega/eval/eval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "mega/error.hpp"
#include "mega/hash.hpp"
#include "mega/llm/image.hpp"
#include "mega/mathcheck/mentions.hpp"
#include "mega/mathcheck/oracle.hpp"
#include "mega/prompt/prompt_kit.hpp"
#include "mega/tutor/engine.hpp"

namespace mega::eval {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t run_seed(std::uint64_t seed, const std::string& id, InputType type, int trial) {
    std::string h = sha256_hex(std::to_string(seed) + "|" + id + "|" + std::string(input_type_name(type)) + "|" +
                               std::to_string(trial));
    return std::stoull(h.substr(0, 16), nullptr, 16);
}

llm::ImagePayload load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::DatasetParseError, "cannot open image " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    std::string ext = lower(path.extension().string());
    return llm::encode_image(bytes, ext == ".jpg" || ext == ".jpeg" ? "image/jpeg" : "image/png");
}

tutor::ProblemInput input_for(const bank::GoldenProblem& p, InputType type) {
    tutor::ProblemInput in;
    if (type == InputType::Text)
        in.text = p.problem.statement;
    else
        in.image = load_image(p.image_path);
    return in;
}

std::string key_for(const bank::GoldenProblem& p, InputType type) {
    tutor::ProblemInput in = input_for(p, type);
    tutor::Session probe;
    if (in.image) {
        probe.image = in.image;
        probe.original.source = ProblemSource::UserImage;
    } else {
        probe.original.statement = trim(*in.text);
    }
    return llm::conversation_key(prompt::render_turn(tutor::Phase::Identification, probe, prompt::PromptTemplate::bundled()));
}

// Pre-reward text with verbatim copies of the statement removed.
int count_leaks(const std::vector<std::string>& messages, const Problem& original) {
    if (!original.reference) return 0;
    int leaks = 0;
    for (std::string m : messages) {
        for (auto pos = m.find(original.statement); !original.statement.empty() && pos != std::string::npos;
             pos = m.find(original.statement))
            m.erase(pos, original.statement.size());
        if (!mathcheck::find_answer_mentions(m, *original.reference).empty()) ++leaks;
    }
    return leaks;
}

struct RunResult {
    bool success = false;
    bool backend_error = false;
    int leaks = 0;
};

RunResult run_once(const tutor::TutorEngine& engine, const bank::GoldenProblem& p, InputType type, int trial,
                   const EvalConfig& config) {
    RunResult r;
    const std::string id = p.id + "-" + lower(input_type_name(type)) + "-" + std::to_string(trial);
    try {
        tutor::Outcome o = engine.start_session(input_for(p, type), id, run_seed(config.seed, p.id, type, trial));
        Problem original = o.session.original;
        r.leaks += count_leaks(o.assistant_messages, original);
        const bool category_ok = o.session.stated_category == p.problem.category;
        if (config.success_criterion == SuccessCriterion::CategoryOnly) {
            r.success = category_ok;
            return r;
        }
        o = engine.advance(o.session);
        r.leaks += count_leaks(o.assistant_messages, original);
        o = engine.advance(o.session);
        r.leaks += count_leaks(o.assistant_messages, original);
        if (!o.session.challenge || !o.session.challenge->reference) return r;
        o = engine.submit_answer(o.session, mathcheck::format_answer(*o.session.challenge->reference));
        if (!o.judgment || o.judgment->verdict != tutor::Verdict::Correct) {
            r.leaks += count_leaks(o.assistant_messages, original);
            return r;
        }
        tutor::SolutionText reward = tutor::release_reward(o.session);
        bool answer_ok = false;
        if (p.problem.reference) {
            try {
                auto stated = mathcheck::parse_student_answer(reward.final_answer, mathcheck::kind_of(*p.problem.reference));
                answer_ok = mathcheck::equivalent(stated, *p.problem.reference);
            } catch (const Error&) {
                answer_ok = false;
            }
        }
        r.success = category_ok && answer_ok;
    } catch (const Error& e) {
        r.backend_error = is_backend_error(e.code());
        spdlog::warn("eval run {} failed: {}", id, e.what());
    }
    return r;
}

llm::ScriptRecord record(std::string phase, std::string key, std::string reply) {
    llm::ScriptRecord r;
    r.phase = std::move(phase);
    r.key_prefix = std::move(key);
    r.reply = std::move(reply);
    return r;
}

std::string format_pct(std::optional<double> pct) {
    if (!pct) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *pct);
    return buf;
}

std::string format_target(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string_view input_type_name(InputType t) noexcept { return t == InputType::Image ? "Image" : "Text"; }

std::optional<InputType> input_type_from_name(std::string_view name) noexcept {
    std::string n = lower(name);
    if (n == "image") return InputType::Image;
    if (n == "text") return InputType::Text;
    return std::nullopt;
}

std::string_view criterion_id(SuccessCriterion c) noexcept {
    return c == SuccessCriterion::PipelineComplete ? "pipeline-complete" : "category-only";
}

std::optional<SuccessCriterion> criterion_from_id(std::string_view id) noexcept {
    if (id == "pipeline-complete") return SuccessCriterion::PipelineComplete;
    if (id == "category-only") return SuccessCriterion::CategoryOnly;
    return std::nullopt;
}

void validate(const EvalConfig& config) {
    if (config.input_types.empty()) throw std::invalid_argument("input_types must not be empty");
    if (config.trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (config.parallel < 1) throw std::invalid_argument("parallel must be at least 1");
}

std::optional<double> Cell::percentage() const noexcept {
    if (attempted == 0) return std::nullopt;
    return std::round(1000.0 * succeeded / attempted) / 10.0;
}

Cell CategoryReport::cell(Category c, InputType t) const {
    auto it = cells.find({c, t});
    return it == cells.end() ? Cell{} : it->second;
}

Cell CategoryReport::totals() const {
    Cell t;
    for (const auto& [key, c] : cells) {
        t.attempted += c.attempted;
        t.succeeded += c.succeeded;
        t.errors += c.errors;
        t.gate_violations += c.gate_violations;
    }
    return t;
}

bool CategoryReport::partial() const noexcept {
    return std::any_of(cells.begin(), cells.end(), [](const auto& kv) { return kv.second.errors > 0; });
}

CategoryReport run_eval(const EvalConfig& config) {
    validate(config);
    auto problems = bank::load_golden_set(config.dataset);
    auto backend = llm::make_backend(config.backend);
    return run_eval(config, problems, *backend);
}

CategoryReport run_eval(const EvalConfig& config, const std::vector<bank::GoldenProblem>& problems,
                        llm::ChatBackend& backend) {
    validate(config);
    std::vector<const bank::GoldenProblem*> ordered;
    for (const auto& p : problems) ordered.push_back(&p);
    std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

    struct Unit {
        const bank::GoldenProblem* problem;
        InputType type;
        Cell cell;
    };
    std::vector<Unit> units;
    for (auto* p : ordered)
        for (InputType t : config.input_types) units.push_back({p, t, {}});

    tutor::SystemClock clock;
    tutor::TutorEngine engine(backend, tutor::TutorConfig{}, clock);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < units.size(); i = next++) {
            Unit& u = units[i];
            for (int trial = 0; trial < config.trials; ++trial) {
                RunResult r = run_once(engine, *u.problem, u.type, trial, config);
                ++u.cell.attempted;
                u.cell.succeeded += r.success ? 1 : 0;
                u.cell.errors += r.backend_error ? 1 : 0;
                u.cell.gate_violations += r.leaks;
            }
        }
    };
    std::vector<std::thread> threads;
    const int n = std::min<int>(config.parallel, static_cast<int>(std::max<std::size_t>(units.size(), 1)));
    for (int i = 1; i < n; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    CategoryReport report;
    for (Category c : kCheckableCategories)
        for (InputType t : config.input_types) report.cells[{c, t}];
    for (const auto& u : units) {
        Cell& c = report.cells[{u.problem->problem.category, u.type}];
        c.attempted += u.cell.attempted;
        c.succeeded += u.cell.succeeded;
        c.errors += u.cell.errors;
        c.gate_violations += u.cell.gate_violations;
    }
    return report;
}

const std::map<Category, std::pair<double, double>>& reference_targets() {
    static const std::map<Category, std::pair<double, double>> targets{
        {Category::LinearEquation, {65, 85}}, {Category::QuadraticEquation, {60, 75}},
        {Category::CoordinateGeometry, {55, 65}}, {Category::Factorial, {70, 80}},
        {Category::TriangleByAngles, {67, 75}}, {Category::Trigonometry, {60, 64}},
    };
    return targets;
}

std::string render_report(const CategoryReport& report, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "category,input_type,attempted,succeeded,failed,errors,gate_violations,percentage\n";
        for (const auto& [key, c] : report.cells)
            out << category_id(key.first) << ',' << lower(input_type_name(key.second)) << ',' << c.attempted << ','
                << c.succeeded << ',' << c.failed() << ',' << c.errors << ',' << c.gate_violations << ','
                << format_pct(c.percentage()) << '\n';
        return out.str();
    }

    std::vector<InputType> types;
    for (InputType t : {InputType::Image, InputType::Text})
        if (std::any_of(report.cells.begin(), report.cells.end(), [&](const auto& kv) { return kv.first.second == t; }))
            types.push_back(t);
    if (types.empty()) types = {InputType::Image, InputType::Text};

    std::vector<std::array<std::string, 3>> rows{{"Problem Category", "Input Type", "Percentage (%)"}};
    for (Category c : kCheckableCategories) {
        std::string kinds, pcts;
        for (std::size_t i = 0; i < types.size(); ++i) {
            kinds += (i ? ", " : "") + std::string(input_type_name(types[i]));
            pcts += (i ? ", " : "") + format_pct(report.cell(c, types[i]).percentage());
        }
        rows.push_back({std::string(category_title(c)), kinds, pcts});
    }
    std::size_t w0 = 0, w1 = 0;
    for (const auto& r : rows) {
        w0 = std::max(w0, r[0].size());
        w1 = std::max(w1, r[1].size());
    }
    auto line = [&](const std::array<std::string, 3>& r) {
        out << r[0] << std::string(w0 - r[0].size(), ' ') << " | " << r[1] << std::string(w1 - r[1].size(), ' ')
            << " | " << r[2] << '\n';
    };
    line(rows[0]);
    out << std::string(w0, '-') << "-+-" << std::string(w1, '-') << "-+-" << std::string(14, '-') << '\n';
    for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);

    Cell t = report.totals();
    out << "\nTotal: " << t.succeeded << "/" << t.attempted << " (" << format_pct(t.percentage()) << "%)";
    if (t.errors) out << ", backend errors: " << t.errors << " (partial)";
    out << ", gate violations: " << t.gate_violations << '\n';
    out << "Reference targets (image, text):";
    for (const auto& [c, v] : reference_targets())
        out << "\n  " << category_title(c) << ": " << format_target(v.first) << ", " << format_target(v.second);
    out << '\n';
    return out.str();
}

CategoryReport parse_csv(std::string_view text) {
    CategoryReport report;
    std::istringstream in{std::string(text)};
    std::string line;
    int n = 0;
    auto fail = [&](const std::string& why) {
        throw Error(Errc::DatasetParseError, "report line " + std::to_string(n) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (n == 1) {
            if (line != "category,input_type,attempted,succeeded,failed,errors,gate_violations,percentage")
                fail("unexpected header");
            continue;
        }
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 8) fail("expected 8 fields");
        auto cat = category_from_id(f[0]);
        auto type = input_type_from_name(f[1]);
        if (!cat || !type) fail("unknown category or input type");
        Cell c;
        try {
            c.attempted = std::stoi(f[2]);
            c.succeeded = std::stoi(f[3]);
            c.errors = std::stoi(f[5]);
            c.gate_violations = std::stoi(f[6]);
            if (std::stoi(f[4]) != c.failed()) fail("failed count does not add up");
        } catch (const std::logic_error&) {
            fail("bad number");
        }
        if (format_pct(c.percentage()) != f[7]) fail("percentage does not match counts");
        report.cells[{*cat, *type}] = c;
    }
    if (n == 0) fail("empty report");
    return report;
}

std::vector<llm::ScriptRecord> ratio_script(const std::vector<bank::GoldenProblem>& problems,
                                            const std::vector<InputType>& input_types, int trials,
                                            const CellTargets& targets, std::uint64_t seed) {
    std::vector<const bank::GoldenProblem*> ordered;
    for (const auto& p : problems) ordered.push_back(&p);
    std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<llm::ScriptRecord> out;
    std::mt19937_64 rng(seed);
    for (Category cat : kCheckableCategories) {
        for (InputType type : input_types) {
            std::vector<std::pair<const bank::GoldenProblem*, int>> runs;
            for (auto* p : ordered)
                if (p->problem.category == cat)
                    for (int t = 0; t < trials; ++t) runs.push_back({p, t});
            if (runs.empty()) continue;
            auto it = targets.find({cat, type});
            const double pct = it == targets.end() ? 100.0 : it->second;
            const auto passes = static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(runs.size())));
            std::vector<bool> pass(runs.size(), false);
            std::fill(pass.begin(), pass.begin() + static_cast<std::ptrdiff_t>(std::min(passes, runs.size())), true);
            std::shuffle(pass.begin(), pass.end(), rng);

            const auto wrong = kCheckableCategories[(static_cast<std::size_t>(cat) + 1) % std::size(kCheckableCategories)];
            std::string key;
            const bank::GoldenProblem* keyed = nullptr;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const auto* p = runs[i].first;
                if (p != keyed) {
                    key = key_for(*p, type);
                    keyed = p;
                }
                std::string ident = "Category: " + std::string(category_title(pass[i] ? cat : wrong));
                if (type == InputType::Image) ident = "Problem: " + p->problem.statement + "\n" + ident;
                std::string answer = p->problem.reference ? mathcheck::format_answer(*p->problem.reference) : "";
                out.push_back(record("identification", key, ident));
                out.push_back(record("reinforcement", key, "Here is a similar problem worked step by step."));
                out.push_back(record("challenge", key, "Now try this one on your own."));
                out.push_back(record("reward", key, "Work through the problem one step at a time.\nAnswer: " + answer));
            }
        }
    }
    return out;
}

CellTargets parse_targets(std::string_view text) {
    CellTargets out;
    for (const auto& item : split(text, ',')) {
        std::string s = trim(item);
        if (s.empty()) continue;
        auto colon = s.find(':');
        auto eq = s.find('=');
        if (colon == std::string::npos || eq == std::string::npos || eq < colon)
            throw std::invalid_argument("target must look like category:type=percent, got " + s);
        auto cat = category_from_id(s.substr(0, colon));
        auto type = input_type_from_name(s.substr(colon + 1, eq - colon - 1));
        if (!cat || !type) throw std::invalid_argument("unknown category or input type in " + s);
        double pct = 0;
        try {
            pct = std::stod(s.substr(eq + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad percentage in " + s);
        }
        if (pct < 0 || pct > 100) throw std::invalid_argument("percentage out of range in " + s);
        out[{*cat, *type}] = pct;
    }
    return out;
}

}  // namespace mega::eval
