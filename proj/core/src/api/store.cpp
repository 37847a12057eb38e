#include "mega/api/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <csignal>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace mega::api {

using nlohmann::json;

namespace {

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::system_error(errno, std::generic_category(), "write");
        }
        off += static_cast<std::size_t>(n);
    }
}

void check_continues(std::int64_t last_seq, const std::vector<tutor::Event>& batch) {
    std::int64_t expect = last_seq + 1;
    for (const auto& e : batch) {
        if (e.seq != expect)
            throw std::invalid_argument("event seq " + std::to_string(e.seq) + " does not continue the log at " +
                                        std::to_string(expect));
        ++expect;
    }
}

void fsync_dir(const std::filesystem::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

}  // namespace

void append_durable(const std::filesystem::path& file, const std::string& data) {
    int fd = ::open(file.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw std::system_error(errno, std::generic_category(), "open " + file.string());
    try {
        write_all(fd, data);
        if (::fsync(fd) != 0) throw std::system_error(errno, std::generic_category(), "fsync");
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
}

SessionRecord make_record(std::vector<tutor::Event> events) {
    SessionRecord r;
    if (!events.empty()) {
        const auto& first = events.front();
        r.session_id = first.payload.value("session_id", "");
        r.created_at_ms = first.timestamp_ms;
        r.template_hash = first.payload.value("template_hash", "");
        r.backend = first.payload.value("backend", "");
    }
    r.events = std::move(events);
    return r;
}

// ---- memory

void MemorySessionStore::append(const std::string& id, const std::vector<tutor::Event>& batch) {
    std::lock_guard lock(mu_);
    auto& log = logs_[id];
    check_continues(log.empty() ? 0 : log.back().seq, batch);
    log.insert(log.end(), batch.begin(), batch.end());
}

std::optional<SessionRecord> MemorySessionStore::load(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = logs_.find(id);
    if (it == logs_.end() || it->second.empty()) return std::nullopt;
    return make_record(it->second);
}

std::vector<std::string> MemorySessionStore::list() {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, log] : logs_)
        if (!log.empty()) out.push_back(id);
    return out;
}

// ---- file

FileSessionStore::FileSessionStore(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
    std::filesystem::create_directories(dir_ / "sessions");
}

std::filesystem::path FileSessionStore::log_path(const std::string& id) const { return dir_ / "sessions" / (id + ".log"); }

FileSessionStore::Scan FileSessionStore::scan(const std::filesystem::path& file) const {
    Scan out;
    std::ifstream in(file, std::ios::binary);
    if (!in) return out;
    std::vector<tutor::Event> pending;
    std::string line;
    std::uintmax_t offset = 0;
    while (std::getline(in, line)) {
        const bool complete = !in.eof();
        offset += line.size() + (complete ? 1 : 0);
        if (!complete) break;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) break;
        if (j.contains("commit")) {
            out.events.insert(out.events.end(), pending.begin(), pending.end());
            pending.clear();
            out.committed_bytes = offset;
            continue;
        }
        try {
            pending.push_back(tutor::event_from_json(j));
        } catch (const std::invalid_argument&) {
            break;
        }
    }
    out.file_bytes = std::filesystem::file_size(file);
    return out;
}

void FileSessionStore::count_event() {
    ++written_;
    if (crash_after_ > 0 && written_ == crash_after_) ::raise(SIGKILL);
}

void FileSessionStore::append(const std::string& id, const std::vector<tutor::Event>& batch) {
    if (batch.empty()) return;
    std::lock_guard lock(mu_);
    const auto file = log_path(id);
    const bool existed = std::filesystem::exists(file);
    Scan s = existed ? scan(file) : Scan{};
    check_continues(s.events.empty() ? 0 : s.events.back().seq, batch);
    if (existed && s.file_bytes != s.committed_bytes) std::filesystem::resize_file(file, s.committed_bytes);

    for (std::size_t i = 0; i < batch.size(); ++i) {
        append_durable(file, tutor::to_json(batch[i]).dump() + "\n");
        if (i == 0 && !existed) fsync_dir(file.parent_path());
        if (i + 1 == batch.size()) append_durable(file, json{{"commit", batch.back().seq}}.dump() + "\n");
        count_event();
    }
}

std::optional<SessionRecord> FileSessionStore::load(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto file = log_path(id);
    if (!std::filesystem::exists(file)) return std::nullopt;
    Scan s = scan(file);
    if (s.events.empty()) return std::nullopt;
    return make_record(std::move(s.events));
}

std::vector<std::string> FileSessionStore::list() {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir_ / "sessions"))
        if (entry.path().extension() == ".log") out.push_back(entry.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

// ---- idempotency

IdempotencyLog::IdempotencyLog(std::optional<std::filesystem::path> file) : file_(std::move(file)) {
    if (!file_) return;
    std::ifstream in(*file_, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (in.eof()) break;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("key") || !j.contains("value")) continue;
        entries_[j["key"].get<std::string>()] = j["value"].get<std::string>();
    }
}

std::optional<std::string> IdempotencyLog::find(const std::string& key) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void IdempotencyLog::put(const std::string& key, const std::string& value) {
    std::lock_guard lock(mu_);
    if (file_) append_durable(*file_, json{{"key", key}, {"value", value}}.dump() + "\n");
    entries_[key] = value;
}

}  // namespace mega::api
