#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mega {

// One code per failure the library can raise. The HTTP layer maps each code
// to exactly one API error.
enum class Errc {
    // mathcheck
    SyntaxError,
    UnknownFunction,
    UnboundVariable,
    DomainError,
    IncomparableForms,
    UnsupportedPattern,
    DegenerateProblem,
    // bank
    UnsupportedCategory,
    DatasetParseError,
    // prompt
    MissingTemplateResource,
    MissingField,
    // llm
    UnsupportedMime,
    OversizeImage,
    EmptyImage,
    Timeout,
    RateLimited,
    AuthFailure,
    ScriptExhausted,
    MalformedReply,
    BackendUnavailable,
    // tutor
    EmptyInput,
    UndecodableImage,
    IllegalPhase,
    EmptyAnswer,
    RewardLocked,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message) : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Parse failure with the byte offset of the offending token.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& message)
        : Error(Errc::SyntaxError, message + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class RateLimitedError : public Error {
public:
    RateLimitedError(int retry_after_seconds, const std::string& message)
        : Error(Errc::RateLimited, message), retry_after_(retry_after_seconds) {}

    int retry_after() const noexcept { return retry_after_; }

private:
    int retry_after_;
};

// True for errors that originate in the model backend.
bool is_backend_error(Errc code) noexcept;

}  // namespace mega
