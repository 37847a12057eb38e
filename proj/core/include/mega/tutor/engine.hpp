#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mega/llm/backend.hpp"
#include "mega/mathcheck/answer.hpp"
#include "mega/prompt/prompt_kit.hpp"
#include "mega/tutor/events.hpp"
#include "mega/tutor/session.hpp"

namespace mega::tutor {

inline constexpr std::string_view kMask = "\xE2\x96\xAE";  // ▮

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() const = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_ms() const override;
};

class ManualClock final : public Clock {
public:
    explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
    std::int64_t now_ms() const override { return now_.load(); }
    void set(std::int64_t ms) { now_.store(ms); }
    void advance(std::int64_t ms) { now_.fetch_add(ms); }

private:
    std::atomic<std::int64_t> now_;
};

struct ProblemInput {
    std::optional<std::string> text;
    std::optional<llm::ImagePayload> image;
};

struct TutorConfig {
    int hint_threshold = 2;
    bool allow_model_judge = false;
    std::int64_t ttl_seconds = 24 * 3600;
    mathcheck::EquivalencePolicy policy;
};

// Result of one operation: the new state, the events that produced it (to
// be persisted as one batch) and the redacted assistant text to send.
struct Outcome {
    Session session;
    std::vector<Event> events;
    std::vector<std::string> assistant_messages;
    std::optional<Judgment> judgment;
};

// Drives the four phases. Every operation is all-or-nothing: on error no
// events are produced. Callers serialize operations per session.
class TutorEngine {
public:
    TutorEngine(llm::ChatBackend& backend, TutorConfig config, const Clock& clock,
                const prompt::PromptTemplate& tmpl = prompt::PromptTemplate::bundled());

    // Errors: EmptyInput, UndecodableImage, backend errors.
    Outcome start_session(const ProblemInput& input, const std::string& session_id, std::uint64_t seed) const;
    // Errors: IllegalPhase, backend errors.
    Outcome advance(const Session& session) const;
    // Errors: IllegalPhase, EmptyAnswer, backend errors.
    Outcome submit_answer(const Session& session, std::string_view answer) const;
    // Abandons a session idle beyond the TTL. Completed sessions are kept.
    std::optional<Outcome> expire_if_idle(const Session& session) const;

    const TutorConfig& config() const noexcept { return config_; }

private:
    llm::ChatBackend& backend_;
    TutorConfig config_;
    const Clock& clock_;
    const prompt::PromptTemplate& tmpl_;
};

// Masks the reference final answer before the reward is released. Mentions
// inside a verbatim copy of the original statement are kept.
std::string redact_solution(std::string_view text, const Session& session);

// Throws Error(RewardLocked) unless the phase is RewardReleased.
SolutionText release_reward(const Session& session);

// Category named in an identification reply: a "Category:" line, else the
// earliest category keyword.
std::optional<Category> parse_stated_category(std::string_view reply);
// Text after the first "Problem:" line marker.
std::optional<std::string> parse_problem_line(std::string_view reply);
// Text after the last "Answer:" line marker.
std::optional<std::string> parse_answer_line(std::string_view reply);

}  // namespace mega::tutor
