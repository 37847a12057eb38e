#include "mega/tutor/events.hpp"

#include <stdexcept>

#include "mega/mathcheck/expr.hpp"

namespace mega::tutor {

using nlohmann::json;

namespace {

constexpr EventKind kKinds[] = {EventKind::SessionOpened,  EventKind::MessageAppended, EventKind::AnalogAttached,
                                EventKind::ChallengeAttached, EventKind::PhaseChanged, EventKind::AnswerJudged,
                                EventKind::RewardReleased, EventKind::Abandoned};

mathcheck::Rational rational_from_text(const std::string& text) {
    auto value = mathcheck::evaluate_exact(*mathcheck::parse_expression(text));
    if (!value) throw std::invalid_argument("not a rational: " + text);
    return *value;
}

template <typename T>
T required(const json& j, const char* field) {
    if (!j.contains(field)) throw std::invalid_argument(std::string("missing field ") + field);
    return j.at(field).get<T>();
}

}  // namespace

std::string_view event_kind_id(EventKind k) noexcept {
    switch (k) {
        case EventKind::SessionOpened: return "session_opened";
        case EventKind::MessageAppended: return "message_appended";
        case EventKind::AnalogAttached: return "analog_attached";
        case EventKind::ChallengeAttached: return "challenge_attached";
        case EventKind::PhaseChanged: return "phase_changed";
        case EventKind::AnswerJudged: return "answer_judged";
        case EventKind::RewardReleased: return "reward_released";
        case EventKind::Abandoned: return "abandoned";
    }
    return "abandoned";
}

std::optional<EventKind> event_kind_from_id(std::string_view id) noexcept {
    for (EventKind k : kKinds)
        if (event_kind_id(k) == id) return k;
    return std::nullopt;
}

json to_json(const Event& e) {
    return json{{"seq", e.seq}, {"ts", e.timestamp_ms}, {"kind", event_kind_id(e.kind)}, {"payload", e.payload}};
}

Event event_from_json(const json& j) {
    try {
        Event e;
        e.seq = required<std::int64_t>(j, "seq");
        e.timestamp_ms = required<std::int64_t>(j, "ts");
        auto kind = event_kind_from_id(required<std::string>(j, "kind"));
        if (!kind) throw std::invalid_argument("unknown event kind");
        e.kind = *kind;
        e.payload = j.contains("payload") ? j.at("payload") : json::object();
        return e;
    } catch (const json::exception& ex) {
        throw std::invalid_argument(std::string("malformed event: ") + ex.what());
    }
}

json problem_to_json(const Problem& p) {
    json j{{"statement", p.statement}, {"category", category_id(p.category)}, {"source", source_id(p.source)}};
    json params = json::object();
    for (const auto& [name, value] : p.params) params[name] = value.to_string();
    j["params"] = params;
    j["reference"] = p.reference ? json(mathcheck::format_answer(*p.reference)) : json(nullptr);
    return j;
}

Problem problem_from_json(const json& j) {
    Problem p;
    p.statement = required<std::string>(j, "statement");
    auto category = category_from_id(required<std::string>(j, "category"));
    auto source = source_from_id(required<std::string>(j, "source"));
    if (!category || !source) throw std::invalid_argument("bad problem category or source");
    p.category = *category;
    p.source = *source;
    if (j.contains("params"))
        for (const auto& [name, value] : j.at("params").items()) p.params[name] = rational_from_text(value.get<std::string>());
    if (j.contains("reference") && j.at("reference").is_string())
        p.reference = mathcheck::parse_answer(j.at("reference").get<std::string>());
    return p;
}

void apply(Session& s, const Event& e) {
    if (e.seq != s.last_seq + 1)
        throw std::invalid_argument("event seq " + std::to_string(e.seq) + " does not follow " + std::to_string(s.last_seq));
    if (e.kind != EventKind::SessionOpened && s.last_seq == 0) throw std::invalid_argument("log must open with session_opened");
    const json& p = e.payload;
    try {
        switch (e.kind) {
            case EventKind::SessionOpened: {
                if (s.last_seq != 0) throw std::invalid_argument("duplicate session_opened");
                s.session_id = required<std::string>(p, "session_id");
                s.created_at_ms = e.timestamp_ms;
                s.phase = Phase::Identification;
                s.original = problem_from_json(p.at("original"));
                if (p.contains("image") && p.at("image").is_object())
                    s.image = llm::decode_image(required<std::string>(p.at("image"), "base64"),
                                                required<std::string>(p.at("image"), "mime"));
                if (p.contains("stated_category") && p.at("stated_category").is_string())
                    s.stated_category = category_from_id(p.at("stated_category").get<std::string>());
                if (p.contains("reference_text") && p.at("reference_text").is_string())
                    s.reference_text = p.at("reference_text").get<std::string>();
                s.template_hash = p.value("template_hash", "");
                s.backend = p.value("backend", "");
                s.seed = p.value("seed", std::uint64_t{0});
                break;
            }
            case EventKind::MessageAppended: {
                auto role = role_from_name(required<std::string>(p, "role"));
                if (!role) throw std::invalid_argument("unknown role");
                ChatMessage m{*role, required<std::string>(p, "text"), std::nullopt};
                if (p.value("attachment", false)) {
                    if (!s.image) throw std::invalid_argument("attachment without session image");
                    m.attachment = s.image;
                }
                s.transcript.push_back(std::move(m));
                break;
            }
            case EventKind::AnalogAttached:
                s.analog = problem_from_json(p.at("problem"));
                break;
            case EventKind::ChallengeAttached:
                s.challenge = problem_from_json(p.at("problem"));
                if (p.contains("reference_text") && p.at("reference_text").is_string())
                    s.challenge_reference_text = p.at("reference_text").get<std::string>();
                break;
            case EventKind::PhaseChanged: {
                auto to = phase_from_id(required<std::string>(p, "to"));
                if (!to) throw std::invalid_argument("unknown phase");
                s.phase = *to;
                break;
            }
            case EventKind::AnswerJudged: {
                Judgment jd;
                auto verdict = verdict_from_id(required<std::string>(p, "verdict"));
                auto checker = checker_from_id(required<std::string>(p, "checker"));
                if (!verdict || !checker) throw std::invalid_argument("bad judgment");
                jd.verdict = *verdict;
                jd.checker = *checker;
                jd.rationale = p.value("rationale", "");
                s.judgments.push_back(jd);
                s.attempts = required<int>(p, "attempts");
                s.hint_level = required<int>(p, "hint_level");
                break;
            }
            case EventKind::RewardReleased: {
                SolutionText r;
                r.steps = required<std::vector<std::string>>(p, "steps");
                r.final_answer = required<std::string>(p, "final_answer");
                s.reward = std::move(r);
                break;
            }
            case EventKind::Abandoned:
                s.phase = Phase::Abandoned;
                s.reward.reset();
                break;
        }
    } catch (const json::exception& ex) {
        throw std::invalid_argument(std::string("malformed ") + std::string(event_kind_id(e.kind)) + ": " + ex.what());
    }
    s.last_seq = e.seq;
    s.last_activity_ms = e.timestamp_ms;
}

json session_snapshot(const Session& s) {
    json transcript = json::array();
    for (const auto& m : s.transcript)
        transcript.push_back({{"role", role_name(m.role)}, {"text", m.text}, {"attachment", m.attachment ? m.attachment->encoded : ""}});
    json judgments = json::array();
    for (const auto& j : s.judgments)
        judgments.push_back({{"verdict", verdict_id(j.verdict)}, {"rationale", j.rationale}, {"checker", checker_id(j.checker)}});
    json j{{"session_id", s.session_id},
           {"phase", phase_id(s.phase)},
           {"original", problem_to_json(s.original)},
           {"analog", s.analog ? problem_to_json(*s.analog) : json(nullptr)},
           {"challenge", s.challenge ? problem_to_json(*s.challenge) : json(nullptr)},
           {"transcript", transcript},
           {"attempts", s.attempts},
           {"hint_level", s.hint_level},
           {"judgments", judgments},
           {"image", s.image ? json{{"mime", s.image->mime}, {"base64", s.image->encoded}} : json(nullptr)},
           {"stated_category", s.stated_category ? json(category_id(*s.stated_category)) : json(nullptr)},
           {"reference_text", s.reference_text ? json(*s.reference_text) : json(nullptr)},
           {"challenge_reference_text", s.challenge_reference_text ? json(*s.challenge_reference_text) : json(nullptr)},
           {"template_hash", s.template_hash},
           {"backend", s.backend},
           {"seed", s.seed},
           {"created_at_ms", s.created_at_ms},
           {"last_activity_ms", s.last_activity_ms},
           {"last_seq", s.last_seq}};
    j["reward"] = s.reward ? json{{"steps", s.reward->steps}, {"final_answer", s.reward->final_answer}} : json(nullptr);
    return j;
}

Session replay(const std::vector<Event>& events) {
    Session s;
    for (const auto& e : events) apply(s, e);
    return s;
}

}  // namespace mega::tutor
