#include "mega/error.hpp"

namespace mega {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::SyntaxError: return "syntax_error";
        case Errc::UnknownFunction: return "unknown_function";
        case Errc::UnboundVariable: return "unbound_variable";
        case Errc::DomainError: return "domain_error";
        case Errc::IncomparableForms: return "incomparable_forms";
        case Errc::UnsupportedPattern: return "unsupported_pattern";
        case Errc::DegenerateProblem: return "degenerate_problem";
        case Errc::UnsupportedCategory: return "unsupported_category";
        case Errc::DatasetParseError: return "dataset_parse_error";
        case Errc::MissingTemplateResource: return "missing_template_resource";
        case Errc::MissingField: return "missing_field";
        case Errc::UnsupportedMime: return "unsupported_mime";
        case Errc::OversizeImage: return "oversize_image";
        case Errc::EmptyImage: return "empty_image";
        case Errc::Timeout: return "backend_timeout";
        case Errc::RateLimited: return "backend_rate_limited";
        case Errc::AuthFailure: return "backend_auth_failure";
        case Errc::ScriptExhausted: return "script_exhausted";
        case Errc::MalformedReply: return "malformed_reply";
        case Errc::BackendUnavailable: return "backend_unavailable";
        case Errc::EmptyInput: return "empty_input";
        case Errc::UndecodableImage: return "undecodable_image";
        case Errc::IllegalPhase: return "illegal_phase";
        case Errc::EmptyAnswer: return "empty_answer";
        case Errc::RewardLocked: return "reward_locked";
    }
    return "unknown";
}

bool is_backend_error(Errc code) noexcept {
    switch (code) {
        case Errc::Timeout:
        case Errc::RateLimited:
        case Errc::AuthFailure:
        case Errc::ScriptExhausted:
        case Errc::MalformedReply:
        case Errc::BackendUnavailable:
            return true;
        default:
            return false;
    }
}

}  // namespace mega
