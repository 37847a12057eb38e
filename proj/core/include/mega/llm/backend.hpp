#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mega/chat.hpp"

namespace mega::llm {

enum class Finish { Complete, Truncated, Refused };

std::string_view finish_id(Finish f) noexcept;  // "complete", "truncated", "refused"
std::optional<Finish> finish_from_id(std::string_view id) noexcept;

struct Usage {
    int prompt = 0;
    int completion = 0;
};

struct ModelReply {
    std::string text;
    Finish finish = Finish::Complete;
    Usage usage;
    std::int64_t latency_ms = 0;
};

enum class BackendKind { Remote, Scripted };

std::string_view backend_kind_id(BackendKind k) noexcept;  // "remote", "scripted"
std::optional<BackendKind> backend_kind_from_id(std::string_view id) noexcept;

struct BackendConfig {
    BackendKind kind = BackendKind::Scripted;
    // Chat-completion URL, e.g. https://api.openai.com/v1/chat/completions
    std::string endpoint_url;
    std::string model_name = "gpt-4o";
    // Name of the environment variable holding the API key.
    std::string api_key_ref = "MEGA_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 2;
    int initial_backoff_ms = 500;
    double temperature = 0.0;
    std::filesystem::path script_path;
};

// Remote needs endpoint_url and api_key_ref, Scripted needs script_path.
// Throws std::invalid_argument.
void validate(const BackendConfig& config);

// Phase tag of an outbound request: identification, reinforcement,
// challenge, reward, reference, challenge_reference, judge.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Errors: Timeout, RateLimited (RateLimitedError), AuthFailure,
    // ScriptExhausted, MalformedReply, BackendUnavailable.
    virtual ModelReply complete(const std::vector<ChatMessage>& messages, std::string_view phase_tag) = 0;
    virtual BackendKind kind() const noexcept = 0;
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

// SHA-256 hex of the first Student message text, a newline, and its
// attachment's base64 (empty without one). Identifies the conversation a
// request belongs to.
std::string conversation_key(const std::vector<ChatMessage>& messages);

struct ScriptRecord {
    // Empty matches any phase.
    std::string phase;
    // Prefix of conversation_key; empty matches any conversation.
    std::string key_prefix;
    std::string reply;
    Finish finish = Finish::Complete;
    // Raises this error instead of replying: "timeout", "rate_limited",
    // "auth_failure", "malformed_reply", "unavailable".
    std::string error;

    bool operator==(const ScriptRecord&) const = default;
};

// Line-delimited records {phase, key, reply, finish?, error?}.
// Throws Error(DatasetParseError) naming the line.
std::vector<ScriptRecord> load_script(const std::filesystem::path& file);
void save_script(const std::filesystem::path& file, const std::vector<ScriptRecord>& records);

// Each request consumes the earliest unconsumed record whose phase and key
// prefix match. Thread-safe; matching is serialized.
class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptRecord> records);

    ModelReply complete(const std::vector<ChatMessage>& messages, std::string_view phase_tag) override;
    BackendKind kind() const noexcept override { return BackendKind::Scripted; }

    std::size_t remaining() const;

private:
    struct Group {
        std::string phase;
        std::string prefix;
        std::vector<std::size_t> indices;
        std::size_t next = 0;
    };
    std::vector<ScriptRecord> records_;
    std::vector<Group> groups_;
    std::size_t consumed_ = 0;
    mutable std::mutex mu_;
};

// OpenAI-style chat-completion client. Images travel as base64 data URLs.
class RemoteBackend final : public ChatBackend {
public:
    explicit RemoteBackend(BackendConfig config);

    ModelReply complete(const std::vector<ChatMessage>& messages, std::string_view phase_tag) override;
    BackendKind kind() const noexcept override { return BackendKind::Remote; }

    // Request body for messages, exposed for inspection.
    std::string request_body(const std::vector<ChatMessage>& messages) const;

private:
    BackendConfig config_;
};

}  // namespace mega::llm
