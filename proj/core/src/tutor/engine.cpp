#include "mega/tutor/engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <sstream>

#include "mega/bank/problem_bank.hpp"
#include "mega/error.hpp"
#include "mega/mathcheck/mentions.hpp"
#include "mega/mathcheck/oracle.hpp"

namespace mega::tutor {

using nlohmann::json;

std::int64_t SystemClock::now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

// Drops leading markdown decoration: "#", "*", "-", ">".
std::string undecorate(std::string_view line) {
    std::string s = trim(line);
    std::size_t b = 0;
    while (b < s.size() && (s[b] == '#' || s[b] == '*' || s[b] == '-' || s[b] == '>' || s[b] == ' ')) ++b;
    s = s.substr(b);
    return s;
}

// Value after "marker:" when the undecorated line starts with the marker.
std::optional<std::string> marker_value(std::string_view line, std::string_view marker) {
    std::string s = undecorate(line);
    std::string l = lower(s);
    if (l.rfind(marker, 0) != 0) return std::nullopt;
    std::size_t i = marker.size();
    while (i < s.size() && s[i] == '*') ++i;
    if (i >= s.size() || s[i] != ':') return std::nullopt;
    std::string v = trim(std::string_view(s).substr(i + 1));
    std::size_t b = 0;
    while (b < v.size() && v[b] == '*') ++b;
    std::size_t e = v.size();
    while (e > b && v[e - 1] == '*') --e;
    return trim(std::string_view(v).substr(b, e - b));
}

struct Keyword {
    const char* word;
    Category category;
};

constexpr Keyword kKeywords[] = {
    {"quadratic", Category::QuadraticEquation}, {"linear", Category::LinearEquation},
    {"factorial", Category::Factorial},         {"coordinate", Category::CoordinateGeometry},
    {"trigonometr", Category::Trigonometry},    {"triangle", Category::TriangleByAngles},
};

std::optional<Category> earliest_keyword(std::string_view text) {
    std::string l = lower(text);
    std::optional<Category> best;
    std::size_t best_pos = std::string::npos;
    for (const auto& k : kKeywords) {
        std::size_t pos = l.find(k.word);
        if (pos < best_pos) {
            best_pos = pos;
            best = k.category;
        }
    }
    return best;
}

std::optional<mathcheck::AnswerForm> lenient_answer(std::string_view text) {
    try {
        return mathcheck::parse_answer(text);
    } catch (const Error&) {
    }
    for (auto kind : {mathcheck::AnswerKind::Scalar, mathcheck::AnswerKind::RootSet, mathcheck::AnswerKind::Point,
                      mathcheck::AnswerKind::Label}) {
        try {
            return mathcheck::parse_student_answer(text, kind);
        } catch (const Error&) {
        }
    }
    return std::nullopt;
}

// Working copy of a session that records every applied event.
struct Draft {
    Session s;
    std::vector<Event> events;
    std::int64_t now = 0;
    std::vector<std::size_t> assistant_at;

    void emit(EventKind kind, json payload) {
        Event e{s.last_seq + 1, now, kind, std::move(payload)};
        apply(s, e);
        events.push_back(std::move(e));
    }
    void message(Role role, const std::string& text, bool attachment = false) {
        emit(EventKind::MessageAppended, json{{"role", role_name(role)}, {"text", text}, {"attachment", attachment}});
        if (role == Role::Assistant) assistant_at.push_back(s.transcript.size() - 1);
    }
    void phase(Phase to) { emit(EventKind::PhaseChanged, json{{"to", phase_id(to)}}); }
    Outcome finish(std::optional<Judgment> judgment = std::nullopt) {
        Outcome o;
        for (std::size_t i : assistant_at) o.assistant_messages.push_back(redact_solution(s.transcript[i].text, s));
        o.session = std::move(s);
        o.events = std::move(events);
        o.judgment = std::move(judgment);
        return o;
    }
};

std::string first_nonempty_line(std::string_view text) {
    for (const auto& l : lines_of(text)) {
        std::string t = undecorate(l);
        if (!t.empty()) return t;
    }
    return {};
}

}  // namespace

std::optional<Category> parse_stated_category(std::string_view reply) {
    for (const auto& line : lines_of(reply)) {
        auto v = marker_value(line, "category");
        if (!v) v = marker_value(line, "problem type");
        if (!v) continue;
        if (auto c = earliest_keyword(*v)) return c;
    }
    return earliest_keyword(reply);
}

std::optional<std::string> parse_problem_line(std::string_view reply) {
    for (const auto& line : lines_of(reply))
        if (auto v = marker_value(line, "problem"); v && !v->empty()) return v;
    return std::nullopt;
}

std::optional<std::string> parse_answer_line(std::string_view reply) {
    std::optional<std::string> found;
    for (const auto& line : lines_of(reply)) {
        auto v = marker_value(line, "answer");
        if (!v) v = marker_value(line, "final answer");
        if (v && !v->empty()) found = v;
    }
    return found;
}

std::string redact_solution(std::string_view text, const Session& session) {
    if (session.phase == Phase::RewardReleased) return std::string(text);
    std::string t = prompt::normalize_notation(text);

    std::optional<mathcheck::AnswerForm> form = session.original.reference;
    if (!form && session.reference_text) form = lenient_answer(*session.reference_text);

    std::vector<mathcheck::Span> spans;
    if (form) {
        spans = mathcheck::find_answer_mentions(t, *form);
    } else if (session.reference_text) {
        std::string needle = lower(trim(*session.reference_text));
        std::string hay = lower(t);
        if (!needle.empty())
            for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size()))
                spans.push_back({pos, pos + needle.size()});
    }
    if (spans.empty()) return t;

    std::vector<mathcheck::Span> kept;
    for (const std::string& stmt : {session.original.statement, prompt::normalize_notation(session.original.statement)}) {
        if (stmt.empty()) continue;
        for (std::size_t pos = t.find(stmt); pos != std::string::npos; pos = t.find(stmt, pos + 1))
            kept.push_back({pos, pos + stmt.size()});
    }
    std::string out;
    std::size_t cursor = 0;
    for (const auto& sp : spans) {
        bool inside = std::any_of(kept.begin(), kept.end(), [&](const mathcheck::Span& k) { return k.begin <= sp.begin && sp.end <= k.end; });
        if (inside || sp.begin < cursor) continue;
        out.append(t, cursor, sp.begin - cursor);
        out += kMask;
        cursor = sp.end;
    }
    out.append(t, cursor, std::string::npos);
    return out;
}

SolutionText release_reward(const Session& session) {
    if (session.phase != Phase::RewardReleased || !session.reward)
        throw Error(Errc::RewardLocked, "the reward is released after a correct challenge answer");
    return *session.reward;
}

TutorEngine::TutorEngine(llm::ChatBackend& backend, TutorConfig config, const Clock& clock, const prompt::PromptTemplate& tmpl)
    : backend_(backend), config_(std::move(config)), clock_(clock), tmpl_(tmpl) {
    config_.policy.validate();
    if (config_.hint_threshold < 0) throw std::invalid_argument("hint_threshold must be non-negative");
}

namespace {

std::string ask(llm::ChatBackend& backend, const prompt::PromptTemplate& tmpl, std::vector<ChatMessage> messages,
                std::string_view tag) {
    llm::ModelReply reply = backend.complete(messages, tag);
    if (reply.finish == llm::Finish::Truncated) {
        messages.push_back({Role::Assistant, reply.text, std::nullopt});
        messages.push_back({Role::Student, tmpl.stub("retry"), std::nullopt});
        reply = backend.complete(messages, tag);
    }
    if (reply.finish == llm::Finish::Refused)
        throw Error(Errc::BackendUnavailable, "the model refused the " + std::string(tag) + " request");
    std::string text = prompt::normalize_notation(trim(reply.text));
    if (text.empty()) throw Error(Errc::MalformedReply, "empty " + std::string(tag) + " reply");
    return text;
}

std::vector<ChatMessage> with_history(const Session& s, const std::vector<ChatMessage>& turn) {
    std::vector<ChatMessage> out = s.transcript;
    out.insert(out.end(), turn.begin(), turn.end());
    return out;
}

std::string side_channel_answer(llm::ChatBackend& backend, const prompt::PromptTemplate& tmpl, std::string_view stub,
                                const prompt::Fields& fields, std::string_view tag) {
    std::vector<ChatMessage> msgs{{Role::System, tmpl.system_text(), std::nullopt},
                                  {Role::Student, tmpl.render(stub, fields), std::nullopt}};
    std::string reply = ask(backend, tmpl, msgs, tag);
    if (auto a = parse_answer_line(reply)) return *a;
    auto lines = lines_of(reply);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it)
        if (std::string t = undecorate(*it); !t.empty()) return t;
    return reply;
}

}  // namespace

Outcome TutorEngine::start_session(const ProblemInput& input, const std::string& session_id, std::uint64_t seed) const {
    Session probe;
    probe.session_id = session_id;
    if (input.image) {
        if (input.image->bytes.empty() || !llm::supported_mime(input.image->mime))
            throw Error(Errc::UndecodableImage, "image payload is not a PNG or JPEG upload");
        probe.image = input.image;
        probe.original.source = ProblemSource::UserImage;
    } else {
        std::string text = input.text ? trim(*input.text) : std::string();
        if (text.empty()) throw Error(Errc::EmptyInput, "the problem text is empty");
        probe.original.statement = text;
        probe.original.source = ProblemSource::UserText;
    }

    std::vector<ChatMessage> turn = prompt::render_turn(Phase::Identification, probe, tmpl_);
    std::string reply = ask(backend_, tmpl_, turn, "identification");

    Problem original = probe.original;
    if (input.image) {
        original.statement = parse_problem_line(reply).value_or(first_nonempty_line(reply));
        if (original.statement.empty()) throw Error(Errc::BackendUnavailable, "the model returned no transcription");
    }
    original.category = bank::classify(original.statement);
    if (original.category != Category::Unknown) {
        try {
            original.reference = mathcheck::solve_oracle(original);
        } catch (const Error&) {
            original.category = Category::Unknown;
        }
    }
    std::optional<std::string> reference_text;
    if (original.category == Category::Unknown)
        reference_text = side_channel_answer(backend_, tmpl_, "reference", {{"problem_statement", original.statement}}, "reference");

    Draft d;
    d.now = clock_.now_ms();
    json opened{{"session_id", session_id},
                {"original", problem_to_json(original)},
                {"template_hash", tmpl_.hash()},
                {"backend", llm::backend_kind_id(backend_.kind())},
                {"seed", seed}};
    if (input.image) opened["image"] = json{{"mime", input.image->mime}, {"base64", input.image->encoded}};
    if (auto stated = parse_stated_category(reply)) opened["stated_category"] = category_id(*stated);
    if (reference_text) opened["reference_text"] = *reference_text;
    d.emit(EventKind::SessionOpened, opened);
    d.message(Role::System, turn[0].text);
    d.message(Role::Student, turn[1].text, turn[1].attachment.has_value());
    d.message(Role::Assistant, reply);
    return d.finish();
}

Outcome TutorEngine::advance(const Session& session) const {
    if (session.phase != Phase::Identification && session.phase != Phase::Reinforcement)
        throw Error(Errc::IllegalPhase, "cannot advance from " + std::string(phase_id(session.phase)));
    const bool open = session.original.category == Category::Unknown;
    bank::GenerationSpec spec;
    spec.seed = session.seed;

    Draft d;
    d.s = session;
    d.now = clock_.now_ms();
    if (session.phase == Phase::Identification) {
        if (!open) d.emit(EventKind::AnalogAttached, json{{"problem", problem_to_json(bank::generate_analog(session.original, spec))}});
        auto turn = prompt::render_turn(Phase::Reinforcement, d.s, tmpl_);
        std::string reply = ask(backend_, tmpl_, with_history(d.s, turn), "reinforcement");
        if (open) {
            Problem analog;
            analog.statement = parse_problem_line(reply).value_or(first_nonempty_line(reply));
            analog.source = ProblemSource::Generated;
            d.emit(EventKind::AnalogAttached, json{{"problem", problem_to_json(analog)}});
        }
        d.phase(Phase::Reinforcement);
        d.message(Role::Student, turn[0].text);
        d.message(Role::Assistant, reply);
        return d.finish();
    }

    if (!open) d.emit(EventKind::ChallengeAttached, json{{"problem", problem_to_json(bank::generate_challenge(session.original, spec))}});
    auto turn = prompt::render_turn(Phase::Challenge, d.s, tmpl_);
    std::string reply = ask(backend_, tmpl_, with_history(d.s, turn), "challenge");
    if (open) {
        Problem challenge;
        challenge.statement = parse_problem_line(reply).value_or(first_nonempty_line(reply));
        challenge.source = ProblemSource::Generated;
        std::string ref = side_channel_answer(backend_, tmpl_, "challenge_reference",
                                              {{"challenge_statement", challenge.statement}}, "challenge_reference");
        d.emit(EventKind::ChallengeAttached, json{{"problem", problem_to_json(challenge)}, {"reference_text", ref}});
    }
    d.phase(Phase::Challenge);
    d.message(Role::Student, turn[0].text);
    d.message(Role::Assistant, reply);
    return d.finish();
}

namespace {

Judgment model_judge(llm::ChatBackend& backend, const prompt::PromptTemplate& tmpl, const Session& s, std::string_view answer) {
    std::vector<ChatMessage> msgs{
        {Role::System, tmpl.system_text(), std::nullopt},
        {Role::Student,
         tmpl.render("judge", {{"challenge_statement", s.challenge->statement}, {"student_answer", std::string(answer)}}),
         std::nullopt}};
    std::string reply = lower(ask(backend, tmpl, msgs, "judge"));
    if (reply.find("incorrect") != std::string::npos) return {Verdict::Incorrect, "the model judge rejected the answer", Checker::ModelJudge};
    if (reply.find("correct") != std::string::npos) return {Verdict::Correct, "the model judge accepted the answer", Checker::ModelJudge};
    return {Verdict::Unparseable, "the model judge gave no verdict", Checker::ModelJudge};
}

}  // namespace

Outcome TutorEngine::submit_answer(const Session& session, std::string_view answer) const {
    if (session.phase != Phase::Challenge)
        throw Error(Errc::IllegalPhase, "answers are accepted in the challenge phase, not " + std::string(phase_id(session.phase)));
    const std::string given = trim(answer);
    if (given.empty()) throw Error(Errc::EmptyAnswer, "the answer is empty");
    if (!session.challenge) throw Error(Errc::IllegalPhase, "the session has no challenge problem");

    std::optional<mathcheck::AnswerForm> expected = session.challenge->reference;
    if (!expected && session.challenge_reference_text) expected = lenient_answer(*session.challenge_reference_text);

    Judgment judgment;
    if (expected) {
        std::optional<mathcheck::AnswerForm> parsed;
        try {
            parsed = mathcheck::parse_student_answer(prompt::normalize_notation(given), mathcheck::kind_of(*expected));
        } catch (const Error&) {
        }
        if (!parsed) {
            judgment = config_.allow_model_judge
                           ? model_judge(backend_, tmpl_, session, given)
                           : Judgment{Verdict::Unparseable, "the answer could not be read as mathematics", Checker::ExactParser};
        } else {
            try {
                auto exact = config_.policy;
                exact.mode = mathcheck::EquivalenceMode::Exact;
                auto r = mathcheck::check_equivalence(*parsed, *expected, exact);
                Checker checker = r.degraded ? Checker::NumericSample : Checker::ExactParser;
                if (r.degraded) {
                    auto numeric = config_.policy;
                    numeric.mode = mathcheck::EquivalenceMode::Numeric;
                    r = mathcheck::check_equivalence(*parsed, *expected, numeric);
                }
                judgment = r.equivalent ? Judgment{Verdict::Correct, "the answer matches the challenge solution", checker}
                                        : Judgment{Verdict::Incorrect, "the answer does not match the challenge solution", checker};
            } catch (const Error& e) {
                judgment = {Verdict::Incorrect, std::string("the answer has the wrong form: ") + e.what(), Checker::ExactParser};
            }
        }
    } else if (config_.allow_model_judge) {
        judgment = model_judge(backend_, tmpl_, session, given);
    } else {
        judgment = {Verdict::Unparseable, "no automatic checker is available for this problem", Checker::ExactParser};
    }

    const bool correct = judgment.verdict == Verdict::Correct;
    int failures = 0;
    for (const auto& j : session.judgments) failures += j.verdict != Verdict::Correct;
    if (!correct) ++failures;
    const int attempts = session.attempts + 1;
    const int hint_level = std::max(session.hint_level, std::max(0, failures - config_.hint_threshold + 1));

    Draft d;
    d.s = session;
    d.now = clock_.now_ms();
    d.message(Role::Student, given);
    d.emit(EventKind::AnswerJudged, json{{"answer", given},
                                         {"verdict", verdict_id(judgment.verdict)},
                                         {"rationale", judgment.rationale},
                                         {"checker", checker_id(judgment.checker)},
                                         {"attempts", attempts},
                                         {"hint_level", hint_level}});
    if (!correct) {
        std::string feedback = tmpl_.stub(judgment.verdict == Verdict::Unparseable ? "unparseable" : "incorrect");
        if (hint_level >= 1) feedback += "\n\n" + tmpl_.stub("hint_" + std::string(category_id(session.original.category)));
        if (hint_level >= 2 && session.original.category != Category::Unknown) feedback += "\n\n" + tmpl_.stub("hint_unknown");
        d.message(Role::Assistant, feedback);
        return d.finish(judgment);
    }

    d.phase(Phase::RewardReleased);
    auto turn = prompt::render_turn(Phase::RewardReleased, d.s, tmpl_);
    std::string reply = ask(backend_, tmpl_, with_history(d.s, turn), "reward");

    SolutionText reward;
    for (const auto& line : lines_of(reply)) {
        std::string t = trim(line);
        if (t.empty() || marker_value(t, "answer") || marker_value(t, "final answer")) continue;
        reward.steps.push_back(t);
    }
    auto stated = parse_answer_line(reply);
    if (const auto& ref = session.original.reference) {
        reward.final_answer = mathcheck::format_answer(*ref);
        if (stated) {
            try {
                reward.final_answer = mathcheck::format_answer(mathcheck::parse_student_answer(*stated, mathcheck::kind_of(*ref)));
            } catch (const Error&) {
            }
        }
    } else {
        reward.final_answer = stated.value_or(session.reference_text.value_or(""));
    }
    d.message(Role::Assistant, reply);
    d.emit(EventKind::RewardReleased, json{{"steps", reward.steps}, {"final_answer", reward.final_answer}});
    return d.finish(judgment);
}

std::optional<Outcome> TutorEngine::expire_if_idle(const Session& session) const {
    if (session.phase == Phase::RewardReleased || session.phase == Phase::Abandoned) return std::nullopt;
    const std::int64_t now = clock_.now_ms();
    if (now - session.last_activity_ms <= config_.ttl_seconds * 1000) return std::nullopt;
    Draft d;
    d.s = session;
    d.now = now;
    d.emit(EventKind::Abandoned, json{{"idle_ms", now - session.last_activity_ms}});
    return d.finish();
}

}  // namespace mega::tutor
