#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mega/tutor/events.hpp"

namespace mega::api {

struct SessionRecord {
    std::string session_id;
    std::int64_t created_at_ms = 0;
    std::vector<tutor::Event> events;
    std::string template_hash;
    std::string backend;
};

SessionRecord make_record(std::vector<tutor::Event> events);

// Append-only event logs, one per session. A batch is durable as a whole or
// not at all.
class SessionStore {
public:
    virtual ~SessionStore() = default;
    // Throws std::invalid_argument when the batch does not continue the log.
    virtual void append(const std::string& session_id, const std::vector<tutor::Event>& batch) = 0;
    virtual std::optional<SessionRecord> load(const std::string& session_id) = 0;
    virtual std::vector<std::string> list() = 0;
};

class MemorySessionStore final : public SessionStore {
public:
    void append(const std::string& session_id, const std::vector<tutor::Event>& batch) override;
    std::optional<SessionRecord> load(const std::string& session_id) override;
    std::vector<std::string> list() override;

private:
    std::mutex mu_;
    std::map<std::string, std::vector<tutor::Event>> logs_;
};

// <dir>/sessions/<id>.log holds one JSON event per line, each batch closed by
// a {"commit": seq} line. Every line is fsync'd. Lines after the last commit
// are a torn batch: ignored on load and cut off before the next append.
class FileSessionStore final : public SessionStore {
public:
    explicit FileSessionStore(std::filesystem::path data_dir);

    void append(const std::string& session_id, const std::vector<tutor::Event>& batch) override;
    std::optional<SessionRecord> load(const std::string& session_id) override;
    std::vector<std::string> list() override;

    // Fault injection: the process sends itself SIGKILL once this many events
    // have been written (after the commit line when the event closes a batch).
    void crash_after_events(std::int64_t count) { crash_after_ = count; }

private:
    struct Scan {
        std::vector<tutor::Event> events;
        std::uintmax_t committed_bytes = 0;
        std::uintmax_t file_bytes = 0;
    };
    Scan scan(const std::filesystem::path& file) const;
    std::filesystem::path log_path(const std::string& session_id) const;
    void count_event();

    std::filesystem::path dir_;
    std::mutex mu_;
    std::int64_t crash_after_ = 0;
    std::int64_t written_ = 0;
};

// Line-delimited persistent map for idempotent replies.
class IdempotencyLog {
public:
    explicit IdempotencyLog(std::optional<std::filesystem::path> file);

    std::optional<std::string> find(const std::string& key);
    void put(const std::string& key, const std::string& value);

private:
    std::optional<std::filesystem::path> file_;
    std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

// Appends one line and fsyncs it.
void append_durable(const std::filesystem::path& file, const std::string& data);

}  // namespace mega::api
