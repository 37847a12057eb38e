#include "mega/llm/backend.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <stdexcept>
#include <thread>

#include "mega/error.hpp"
#include "mega/hash.hpp"

namespace mega::llm {

using nlohmann::json;

std::string_view finish_id(Finish f) noexcept {
    switch (f) {
        case Finish::Complete: return "complete";
        case Finish::Truncated: return "truncated";
        case Finish::Refused: return "refused";
    }
    return "complete";
}

std::optional<Finish> finish_from_id(std::string_view id) noexcept {
    for (Finish f : {Finish::Complete, Finish::Truncated, Finish::Refused})
        if (finish_id(f) == id) return f;
    return std::nullopt;
}

std::string_view backend_kind_id(BackendKind k) noexcept { return k == BackendKind::Remote ? "remote" : "scripted"; }

std::optional<BackendKind> backend_kind_from_id(std::string_view id) noexcept {
    if (id == "remote") return BackendKind::Remote;
    if (id == "scripted") return BackendKind::Scripted;
    return std::nullopt;
}

void validate(const BackendConfig& c) {
    if (c.kind == BackendKind::Remote) {
        if (c.endpoint_url.empty()) throw std::invalid_argument("remote backend needs endpoint_url");
        if (c.api_key_ref.empty()) throw std::invalid_argument("remote backend needs api_key_ref");
    } else if (c.script_path.empty()) {
        throw std::invalid_argument("scripted backend needs script_path");
    }
    if (c.timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be positive");
    if (c.max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
    validate(config);
    if (config.kind == BackendKind::Remote) return std::make_unique<RemoteBackend>(config);
    return std::make_unique<ScriptedBackend>(load_script(config.script_path));
}

std::string conversation_key(const std::vector<ChatMessage>& messages) {
    for (const auto& m : messages) {
        if (m.role != Role::Student) continue;
        return sha256_hex(m.text + "\n" + (m.attachment ? m.attachment->encoded : std::string()));
    }
    return sha256_hex("\n");
}

// ---- script files

std::vector<ScriptRecord> load_script(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::DatasetParseError, "cannot open script " + file.string());
    std::vector<ScriptRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            ScriptRecord r;
            r.phase = j.value("phase", "");
            r.key_prefix = j.value("key", "");
            r.reply = j.value("reply", "");
            r.error = j.value("error", "");
            auto finish = finish_from_id(j.value("finish", "complete"));
            if (!finish) throw std::invalid_argument("unknown finish");
            r.finish = *finish;
            if (r.error.empty() && !j.contains("reply")) throw std::invalid_argument("missing reply");
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw Error(Errc::DatasetParseError,
                        file.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void save_script(const std::filesystem::path& file, const std::vector<ScriptRecord>& records) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write script " + file.string());
    for (const auto& r : records) {
        json j;
        j["phase"] = r.phase;
        j["key"] = r.key_prefix;
        if (!r.error.empty()) j["error"] = r.error;
        j["reply"] = r.reply;
        if (r.finish != Finish::Complete) j["finish"] = finish_id(r.finish);
        out << j.dump() << '\n';
    }
}

// ---- scripted

ScriptedBackend::ScriptedBackend(std::vector<ScriptRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        auto it = std::find_if(groups_.begin(), groups_.end(),
                               [&](const Group& g) { return g.phase == r.phase && g.prefix == r.key_prefix; });
        if (it == groups_.end()) {
            groups_.push_back({r.phase, r.key_prefix, {}, 0});
            it = groups_.end() - 1;
        }
        it->indices.push_back(i);
    }
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mu_);
    return records_.size() - consumed_;
}

ModelReply ScriptedBackend::complete(const std::vector<ChatMessage>& messages, std::string_view phase_tag) {
    if (messages.empty()) throw std::invalid_argument("no messages");
    const std::string key = conversation_key(messages);
    std::size_t chosen = records_.size();
    {
        std::lock_guard lock(mu_);
        Group* best = nullptr;
        for (auto& g : groups_) {
            if (g.next >= g.indices.size()) continue;
            if (!g.phase.empty() && !phase_tag.empty() && g.phase != phase_tag) continue;
            if (key.compare(0, g.prefix.size(), g.prefix) != 0) continue;
            if (!best || g.indices[g.next] < best->indices[best->next]) best = &g;
        }
        if (!best)
            throw Error(Errc::ScriptExhausted,
                        "no scripted reply left for phase " + std::string(phase_tag) + " key " + key.substr(0, 12));
        chosen = best->indices[best->next++];
        ++consumed_;
    }
    const ScriptRecord& r = records_[chosen];
    if (!r.error.empty()) {
        if (r.error == "timeout") throw Error(Errc::Timeout, "scripted timeout");
        if (r.error == "rate_limited") throw RateLimitedError(1, "scripted rate limit");
        if (r.error == "auth_failure") throw Error(Errc::AuthFailure, "scripted auth failure");
        if (r.error == "malformed_reply") throw Error(Errc::MalformedReply, "scripted malformed reply");
        throw Error(Errc::BackendUnavailable, "scripted backend failure: " + r.error);
    }
    if (r.finish == Finish::Complete && r.reply.empty()) throw Error(Errc::MalformedReply, "empty scripted reply");
    ModelReply reply;
    reply.text = r.reply;
    reply.finish = r.finish;
    std::size_t chars = 0;
    for (const auto& m : messages) chars += m.text.size();
    reply.usage = {static_cast<int>(chars / 4), static_cast<int>(r.reply.size() / 4)};
    return reply;
}

// ---- remote

namespace {

struct Endpoint {
    std::string origin;
    std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?)://([^/:]+)(:(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw std::invalid_argument("bad endpoint url: " + url);
    Endpoint e;
    e.origin = m[1].str() + "://" + m[2].str();
    if (m[4].matched) e.origin += ":" + m[4].str();
    e.path = m[5].matched ? m[5].str() : "/";
    return e;
}

std::string_view wire_role(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::Assistant: return "assistant";
        case Role::Student: return "user";
    }
    return "user";
}

int parse_retry_after(const httplib::Response& res) {
    if (!res.has_header("Retry-After")) return 1;
    try {
        return std::max(0, std::stoi(res.get_header_value("Retry-After")));
    } catch (const std::exception&) {
        return 1;
    }
}

ModelReply parse_reply(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedReply, std::string("reply is not JSON: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw Error(Errc::MalformedReply, "reply has no choices");
    const json& choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].is_object()) throw Error(Errc::MalformedReply, "choice has no message");
    const json& msg = choice["message"];
    ModelReply reply;
    if (msg.contains("content") && msg["content"].is_string()) reply.text = msg["content"].get<std::string>();
    std::string reason = choice.value("finish_reason", std::string("stop"));
    if (reason == "length")
        reply.finish = Finish::Truncated;
    else if (reason == "content_filter")
        reply.finish = Finish::Refused;
    if (msg.contains("refusal") && msg["refusal"].is_string()) {
        reply.finish = Finish::Refused;
        if (reply.text.empty()) reply.text = msg["refusal"].get<std::string>();
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        reply.usage.prompt = j["usage"].value("prompt_tokens", 0);
        reply.usage.completion = j["usage"].value("completion_tokens", 0);
    }
    if (reply.finish == Finish::Complete && reply.text.empty()) throw Error(Errc::MalformedReply, "empty completion");
    return reply;
}

}  // namespace

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
    validate(config_);
    parse_endpoint(config_.endpoint_url);
}

std::string RemoteBackend::request_body(const std::vector<ChatMessage>& messages) const {
    json msgs = json::array();
    for (const auto& m : messages) {
        json entry;
        entry["role"] = wire_role(m.role);
        if (m.attachment) {
            json parts = json::array();
            parts.push_back({{"type", "text"}, {"text", m.text}});
            parts.push_back({{"type", "image_url"},
                             {"image_url", {{"url", "data:" + m.attachment->mime + ";base64," + m.attachment->encoded}}}});
            entry["content"] = parts;
        } else {
            entry["content"] = m.text;
        }
        msgs.push_back(entry);
    }
    json body;
    body["model"] = config_.model_name;
    body["temperature"] = config_.temperature;
    body["messages"] = msgs;
    return body.dump();
}

ModelReply RemoteBackend::complete(const std::vector<ChatMessage>& messages, std::string_view phase_tag) {
    if (messages.empty()) throw std::invalid_argument("no messages");
    const char* key = std::getenv(config_.api_key_ref.c_str());
    if (!key || !*key) throw Error(Errc::AuthFailure, "API key variable " + config_.api_key_ref + " is not set");

    const Endpoint ep = parse_endpoint(config_.endpoint_url);
    const std::string body = request_body(messages);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    for (int attempt = 0;; ++attempt) {
        const bool last = attempt >= config_.max_retries;
        auto backoff = std::chrono::milliseconds(static_cast<std::int64_t>(config_.initial_backoff_ms) << attempt);
        httplib::Client cli(ep.origin);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        const auto start = std::chrono::steady_clock::now();
        auto res = cli.Post(ep.path, headers, body, "application/json");
        const auto elapsed =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

        if (!res) {
            auto err = res.error();
            bool timed_out = err == httplib::Error::ConnectionTimeout || elapsed >= timeout;
            spdlog::warn("backend {} request failed ({}), attempt {}", phase_tag, httplib::to_string(err), attempt + 1);
            if (last)
                throw Error(timed_out ? Errc::Timeout : Errc::BackendUnavailable,
                            "chat endpoint unreachable: " + httplib::to_string(err));
            std::this_thread::sleep_for(backoff);
            continue;
        }
        if (res->status == 401 || res->status == 403) throw Error(Errc::AuthFailure, "chat endpoint rejected the API key");
        if (res->status == 429) {
            int retry_after = parse_retry_after(*res);
            if (last) throw RateLimitedError(retry_after, "chat endpoint rate limited the request");
            std::this_thread::sleep_for(std::max(backoff, std::chrono::milliseconds(std::min(retry_after, 60) * 1000)));
            continue;
        }
        if (res->status == 408 || res->status >= 500) {
            if (last)
                throw Error(res->status == 408 || res->status == 504 ? Errc::Timeout : Errc::BackendUnavailable,
                            "chat endpoint status " + std::to_string(res->status));
            std::this_thread::sleep_for(backoff);
            continue;
        }
        if (res->status != 200)
            throw Error(Errc::BackendUnavailable, "chat endpoint status " + std::to_string(res->status) + ": " + res->body);
        ModelReply reply = parse_reply(res->body);
        reply.latency_ms = elapsed.count();
        return reply;
    }
}

}  // namespace mega::llm
