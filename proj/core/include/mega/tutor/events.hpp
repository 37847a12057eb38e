#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mega/tutor/session.hpp"

namespace mega::tutor {

enum class EventKind {
    SessionOpened,
    MessageAppended,
    AnalogAttached,
    ChallengeAttached,
    PhaseChanged,
    AnswerJudged,
    RewardReleased,
    Abandoned,
};

std::string_view event_kind_id(EventKind k) noexcept;  // "session_opened", ...
std::optional<EventKind> event_kind_from_id(std::string_view id) noexcept;

struct Event {
    std::int64_t seq = 0;
    std::int64_t timestamp_ms = 0;
    EventKind kind = EventKind::SessionOpened;
    nlohmann::json payload;

    bool operator==(const Event&) const = default;
};

nlohmann::json to_json(const Event& e);
// Throws std::invalid_argument on a malformed record.
Event event_from_json(const nlohmann::json& j);

nlohmann::json problem_to_json(const Problem& p);
Problem problem_from_json(const nlohmann::json& j);

// Folds one event into a session. Throws std::invalid_argument when seq does
// not follow the session's last seq.
void apply(Session& session, const Event& event);

// Complete state as JSON, hidden fields included. Equal snapshots mean equal
// sessions.
nlohmann::json session_snapshot(const Session& session);

// Session state after a full event log.
Session replay(const std::vector<Event>& events);

}  // namespace mega::tutor
