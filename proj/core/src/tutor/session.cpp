#include "mega/tutor/session.hpp"

namespace mega::tutor {

std::string_view phase_id(Phase p) noexcept {
    switch (p) {
        case Phase::Identification: return "identification";
        case Phase::Reinforcement: return "reinforcement";
        case Phase::Challenge: return "challenge";
        case Phase::RewardReleased: return "reward_released";
        case Phase::Abandoned: return "abandoned";
    }
    return "abandoned";
}

std::optional<Phase> phase_from_id(std::string_view id) noexcept {
    for (Phase p : {Phase::Identification, Phase::Reinforcement, Phase::Challenge, Phase::RewardReleased, Phase::Abandoned})
        if (phase_id(p) == id) return p;
    return std::nullopt;
}

std::string_view verdict_id(Verdict v) noexcept {
    switch (v) {
        case Verdict::Correct: return "correct";
        case Verdict::Incorrect: return "incorrect";
        case Verdict::Unparseable: return "unparseable";
    }
    return "unparseable";
}

std::optional<Verdict> verdict_from_id(std::string_view id) noexcept {
    for (Verdict v : {Verdict::Correct, Verdict::Incorrect, Verdict::Unparseable})
        if (verdict_id(v) == id) return v;
    return std::nullopt;
}

std::string_view checker_id(Checker c) noexcept {
    switch (c) {
        case Checker::ExactParser: return "exact_parser";
        case Checker::NumericSample: return "numeric_sample";
        case Checker::ModelJudge: return "model_judge";
    }
    return "model_judge";
}

std::optional<Checker> checker_from_id(std::string_view id) noexcept {
    for (Checker c : {Checker::ExactParser, Checker::NumericSample, Checker::ModelJudge})
        if (checker_id(c) == id) return c;
    return std::nullopt;
}

}  // namespace mega::tutor
