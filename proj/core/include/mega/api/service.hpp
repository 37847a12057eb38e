#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "mega/api/store.hpp"
#include "mega/error.hpp"
#include "mega/llm/backend.hpp"
#include "mega/tutor/engine.hpp"

namespace mega::api {

struct ApiError {
    std::string code;
    std::string message;
    int http_status = 500;
};

// One code per engine error.
ApiError api_error_for(Errc code, const std::string& message);

struct ServiceConfig {
    int port = 8080;
    std::string host = "0.0.0.0";
    std::filesystem::path data_dir = "mega-data";
    llm::BackendConfig backend;
    std::int64_t session_ttl_seconds = 24 * 3600;
    int rate_limit_per_minute = 600;
    bool allow_model_judge = false;
    // Deterministic session ids, for tests.
    std::optional<std::uint64_t> id_seed;
    // Fault injection, see FileSessionStore::crash_after_events.
    std::int64_t crash_after_events = 0;
};

using EnvLookup = std::function<const char*(const char*)>;

// PORT, HOST, DATA_DIR, BACKEND (remote|scripted), MODEL_NAME, BACKEND_URL,
// API_KEY_ENV (name of the variable holding the key, default
// OPENAI_API_KEY), SCRIPT_PATH, SESSION_TTL_SECONDS, RATE_LIMIT_PER_MINUTE,
// ALLOW_MODEL_JUDGE, MEGA_ID_SEED, MEGA_CRASH_AFTER_EVENTS.
// Throws std::invalid_argument on bad values.
ServiceConfig config_from_env(const EnvLookup& env = [](const char* name) { return std::getenv(name); });

struct HttpRequest {
    std::string method;
    std::string path;
    std::string body;
    std::string idempotency_key;
    std::string client_ip;
};

struct HttpResponse {
    int status = 200;
    std::string body;
    std::map<std::string, std::string> headers;
};

struct ServiceOptions {
    int rate_limit_per_minute = 600;
    std::optional<std::uint64_t> id_seed;
    std::optional<std::filesystem::path> idempotency_file;
};

// Transport-independent request handling. Safe for concurrent use; requests
// on one session are serialized.
class TutorService {
public:
    TutorService(tutor::TutorEngine& engine, SessionStore& store, ServiceOptions options = {});

    HttpResponse handle(const HttpRequest& request);

    // GET body for a session: redacted transcript without system messages,
    // reward only once released.
    static nlohmann::json session_view(const tutor::Session& session);

private:
    HttpResponse route(const HttpRequest& request);
    HttpResponse create(const HttpRequest& request);
    HttpResponse advance(const std::string& id);
    HttpResponse answer(const std::string& id, const HttpRequest& request);
    HttpResponse get(const std::string& id);

    std::shared_ptr<std::mutex> session_lock(const std::string& id);
    std::optional<tutor::Session> load(const std::string& id);
    tutor::Session commit(const std::string& id, tutor::Outcome outcome);
    tutor::Session refresh(const std::string& id, tutor::Session session);
    bool allow(const std::string& ip);
    std::string new_id();

    tutor::TutorEngine& engine_;
    SessionStore& store_;
    ServiceOptions options_;
    IdempotencyLog idempotency_;

    std::mutex mu_;
    std::map<std::string, std::shared_ptr<std::mutex>> locks_;
    std::map<std::string, tutor::Session> cache_;
    std::mt19937_64 ids_;
    std::map<std::string, std::pair<std::int64_t, int>> windows_;
    std::mutex idem_mu_;
};

// httplib front end for a TutorService.
class HttpServer {
public:
    explicit HttpServer(TutorService& service);
    ~HttpServer();

    // Returns the bound port; 0 picks a free one.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mega::api
