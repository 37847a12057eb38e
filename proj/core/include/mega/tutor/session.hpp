#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mega/chat.hpp"
#include "mega/llm/image.hpp"
#include "mega/problem.hpp"

namespace mega::tutor {

enum class Phase { Identification, Reinforcement, Challenge, RewardReleased, Abandoned };

// "identification", "reinforcement", "challenge", "reward_released", "abandoned"
std::string_view phase_id(Phase p) noexcept;
std::optional<Phase> phase_from_id(std::string_view id) noexcept;

enum class Verdict { Correct, Incorrect, Unparseable };
enum class Checker { ExactParser, NumericSample, ModelJudge };

std::string_view verdict_id(Verdict v) noexcept;  // "correct", "incorrect", "unparseable"
std::optional<Verdict> verdict_from_id(std::string_view id) noexcept;
std::string_view checker_id(Checker c) noexcept;  // "exact_parser", "numeric_sample", "model_judge"
std::optional<Checker> checker_from_id(std::string_view id) noexcept;

struct Judgment {
    Verdict verdict = Verdict::Unparseable;
    std::string rationale;
    Checker checker = Checker::ExactParser;

    bool operator==(const Judgment&) const = default;
};

struct SolutionText {
    std::vector<std::string> steps;
    std::string final_answer;

    bool operator==(const SolutionText&) const = default;
};

struct Session {
    std::string session_id;
    Phase phase = Phase::Identification;
    Problem original;
    std::optional<Problem> analog;
    std::optional<Problem> challenge;
    std::vector<ChatMessage> transcript;
    int attempts = 0;
    int hint_level = 0;
    std::optional<SolutionText> reward;

    // Image sessions keep the upload for the identification turn.
    std::optional<llm::ImagePayload> image;
    // Category named in the identification reply, if one could be read.
    std::optional<Category> stated_category;
    // Backend-supplied final answer for categories the oracle cannot solve.
    // Never sent to the student before release.
    std::optional<std::string> reference_text;
    std::optional<std::string> challenge_reference_text;
    std::vector<Judgment> judgments;
    std::string template_hash;
    std::string backend;
    std::uint64_t seed = 0;
    std::int64_t created_at_ms = 0;
    std::int64_t last_activity_ms = 0;
    std::int64_t last_seq = 0;
};

}  // namespace mega::tutor
