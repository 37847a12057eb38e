#include "mega/api/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <regex>

#include "mega/llm/image.hpp"

namespace mega::api {

using nlohmann::json;
using tutor::Phase;
using tutor::Session;

ApiError api_error_for(Errc code, const std::string& message) {
    ApiError e{std::string(errc_name(code)), message, 500};
    switch (code) {
        case Errc::EmptyInput:
        case Errc::UndecodableImage:
        case Errc::UnsupportedMime:
        case Errc::EmptyImage:
        case Errc::EmptyAnswer:
            e.http_status = 400;
            break;
        case Errc::OversizeImage:
            e.http_status = 413;
            break;
        case Errc::IllegalPhase:
        case Errc::RewardLocked:
            e.http_status = 409;
            break;
        case Errc::Timeout:
        case Errc::RateLimited:
        case Errc::AuthFailure:
        case Errc::ScriptExhausted:
        case Errc::MalformedReply:
        case Errc::BackendUnavailable:
            e.http_status = 502;
            break;
        default:
            break;
    }
    return e;
}

namespace {

std::int64_t int_env(const EnvLookup& env, const char* name, std::int64_t fallback) {
    const char* v = env(name);
    if (!v || !*v) return fallback;
    try {
        std::size_t used = 0;
        long long x = std::stoll(v, &used);
        if (used != std::strlen(v)) throw std::invalid_argument(name);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(name) + " must be an integer");
    }
}

std::string str_env(const EnvLookup& env, const char* name, const std::string& fallback) {
    const char* v = env(name);
    return v && *v ? std::string(v) : fallback;
}

HttpResponse json_response(int status, const json& body) { return {status, body.dump(), {{"Content-Type", "application/json"}}}; }

HttpResponse error_response(const ApiError& e) {
    return json_response(e.http_status, json{{"error", {{"code", e.code}, {"message", e.message}}}});
}

HttpResponse error_response(int status, const std::string& code, const std::string& message) {
    return error_response(ApiError{code, message, status});
}

json messages_json(const std::vector<std::string>& messages) { return json(messages); }

const std::regex kSessionPath(R"(^/sessions/([0-9a-f]{32})(/advance|/answers)?$)");

}  // namespace

ServiceConfig config_from_env(const EnvLookup& env) {
    ServiceConfig c;
    c.port = static_cast<int>(int_env(env, "PORT", c.port));
    if (c.port < 0 || c.port > 65535) throw std::invalid_argument("PORT out of range");
    c.host = str_env(env, "HOST", c.host);
    c.data_dir = str_env(env, "DATA_DIR", c.data_dir.string());
    auto kind = llm::backend_kind_from_id(str_env(env, "BACKEND", "scripted"));
    if (!kind) throw std::invalid_argument("BACKEND must be remote or scripted");
    c.backend.kind = *kind;
    c.backend.model_name = str_env(env, "MODEL_NAME", c.backend.model_name);
    c.backend.endpoint_url = str_env(env, "BACKEND_URL", "https://api.openai.com/v1/chat/completions");
    c.backend.api_key_ref = str_env(env, "API_KEY_ENV", "OPENAI_API_KEY");
    c.backend.script_path = str_env(env, "SCRIPT_PATH", "");
    c.backend.timeout_ms = static_cast<int>(int_env(env, "BACKEND_TIMEOUT_MS", c.backend.timeout_ms));
    c.session_ttl_seconds = int_env(env, "SESSION_TTL_SECONDS", c.session_ttl_seconds);
    if (c.session_ttl_seconds <= 0) throw std::invalid_argument("SESSION_TTL_SECONDS must be positive");
    c.rate_limit_per_minute = static_cast<int>(int_env(env, "RATE_LIMIT_PER_MINUTE", c.rate_limit_per_minute));
    c.allow_model_judge = int_env(env, "ALLOW_MODEL_JUDGE", 0) != 0;
    if (const char* seed = env("MEGA_ID_SEED"); seed && *seed) c.id_seed = static_cast<std::uint64_t>(int_env(env, "MEGA_ID_SEED", 0));
    c.crash_after_events = int_env(env, "MEGA_CRASH_AFTER_EVENTS", 0);
    llm::validate(c.backend);
    return c;
}

TutorService::TutorService(tutor::TutorEngine& engine, SessionStore& store, ServiceOptions options)
    : engine_(engine), store_(store), options_(std::move(options)), idempotency_(options_.idempotency_file) {
    if (options_.id_seed)
        ids_.seed(*options_.id_seed);
    else
        ids_.seed(std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32));
}

std::string TutorService::new_id() {
    std::lock_guard lock(mu_);
    for (;;) {
        char buf[33];
        std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(ids_()),
                      static_cast<unsigned long long>(ids_()));
        std::string id(buf);
        if (cache_.count(id) == 0 && !store_.load(id)) return id;
    }
}

bool TutorService::allow(const std::string& ip) {
    if (options_.rate_limit_per_minute <= 0) return true;
    const std::int64_t minute =
        std::chrono::duration_cast<std::chrono::minutes>(std::chrono::steady_clock::now().time_since_epoch()).count();
    std::lock_guard lock(mu_);
    auto& [window, count] = windows_[ip];
    if (window != minute) {
        window = minute;
        count = 0;
    }
    return ++count <= options_.rate_limit_per_minute;
}

std::shared_ptr<std::mutex> TutorService::session_lock(const std::string& id) {
    std::lock_guard lock(mu_);
    auto& m = locks_[id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
}

std::optional<Session> TutorService::load(const std::string& id) {
    {
        std::lock_guard lock(mu_);
        auto it = cache_.find(id);
        if (it != cache_.end()) return it->second;
    }
    auto record = store_.load(id);
    if (!record) return std::nullopt;
    Session s = tutor::replay(record->events);
    std::lock_guard lock(mu_);
    cache_[id] = s;
    return s;
}

Session TutorService::commit(const std::string& id, tutor::Outcome outcome) {
    store_.append(id, outcome.events);
    std::lock_guard lock(mu_);
    cache_[id] = outcome.session;
    return std::move(outcome.session);
}

Session TutorService::refresh(const std::string& id, Session session) {
    if (auto expired = engine_.expire_if_idle(session)) return commit(id, std::move(*expired));
    return session;
}

json TutorService::session_view(const Session& s) {
    json transcript = json::array();
    for (const auto& m : s.transcript) {
        if (m.role == Role::System) continue;
        transcript.push_back({{"role", role_name(m.role)},
                              {"text", tutor::redact_solution(m.text, s)},
                              {"attachment", m.attachment.has_value()}});
    }
    json judgments = json::array();
    for (const auto& j : s.judgments)
        judgments.push_back({{"verdict", tutor::verdict_id(j.verdict)}, {"checker", tutor::checker_id(j.checker)}, {"rationale", j.rationale}});
    json view{{"session_id", s.session_id},
              {"phase", tutor::phase_id(s.phase)},
              {"category", category_id(s.original.category)},
              {"problem", tutor::redact_solution(s.original.statement, s)},
              {"challenge", s.challenge ? json(tutor::redact_solution(s.challenge->statement, s)) : json(nullptr)},
              {"attempts", s.attempts},
              {"hint_level", s.hint_level},
              {"seq", s.last_seq},
              {"template_hash", s.template_hash},
              {"backend", s.backend},
              {"transcript", transcript},
              {"judgments", judgments}};
    if (s.phase == Phase::RewardReleased && s.reward)
        view["reward"] = {{"steps", s.reward->steps}, {"final_answer", s.reward->final_answer}};
    return view;
}

HttpResponse TutorService::handle(const HttpRequest& req) {
    if (!allow(req.client_ip)) return error_response(429, "rate_limited", "too many requests from this address");
    if (req.idempotency_key.empty() || req.method != "POST") return route(req);

    const std::string key = req.method + " " + req.path + " " + req.idempotency_key;
    std::lock_guard lock(idem_mu_);
    if (auto stored = idempotency_.find(key)) {
        json j = json::parse(*stored);
        HttpResponse r = {j["status"].get<int>(), j["body"].get<std::string>(), {{"Content-Type", "application/json"}}};
        r.headers["Idempotent-Replay"] = "true";
        return r;
    }
    HttpResponse r = route(req);
    if (r.status < 500) idempotency_.put(key, json{{"status", r.status}, {"body", r.body}}.dump());
    return r;
}

HttpResponse TutorService::route(const HttpRequest& req) {
    try {
        if (req.path == "/healthz") {
            if (req.method != "GET") return error_response(405, "method_not_allowed", "use GET");
            return json_response(200, json{{"status", "ok"}});
        }
        if (req.path == "/sessions") {
            if (req.method != "POST") return error_response(405, "method_not_allowed", "use POST");
            return create(req);
        }
        std::smatch m;
        if (std::regex_match(req.path, m, kSessionPath)) {
            const std::string id = m[1].str();
            const std::string action = m[2].str();
            if (action.empty()) {
                if (req.method != "GET") return error_response(405, "method_not_allowed", "use GET");
                return get(id);
            }
            if (req.method != "POST") return error_response(405, "method_not_allowed", "use POST");
            return action == "/advance" ? advance(id) : answer(id, req);
        }
        if (req.path.rfind("/sessions/", 0) == 0) return error_response(404, "session_not_found", "no such session");
        return error_response(404, "not_found", "no such endpoint");
    } catch (const Error& e) {
        auto err = api_error_for(e.code(), e.what());
        if (err.http_status >= 500) spdlog::warn("{} {}: {}", req.method, req.path, e.what());
        return error_response(err);
    } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        return error_response(500, "internal_error", e.what());
    }
}

HttpResponse TutorService::create(const HttpRequest& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return error_response(400, "invalid_request", "body must be a JSON object");
    const bool has_text = body.contains("text");
    const bool has_image = body.contains("image_base64");
    if (has_text == has_image) return error_response(400, "invalid_request", "send exactly one of text or image_base64");

    tutor::ProblemInput input;
    if (has_text) {
        if (!body["text"].is_string()) return error_response(400, "invalid_request", "text must be a string");
        input.text = body["text"].get<std::string>();
    } else {
        if (!body["image_base64"].is_string() || !body.contains("mime") || !body["mime"].is_string())
            return error_response(400, "invalid_request", "image_base64 and mime must be strings");
        input.image = llm::decode_image(body["image_base64"].get<std::string>(), body["mime"].get<std::string>());
    }

    const std::string id = new_id();
    auto lock = session_lock(id);
    std::lock_guard guard(*lock);
    const std::uint64_t seed = std::stoull(id.substr(0, 16), nullptr, 16);
    Session s = commit(id, engine_.start_session(input, id, seed));
    json out{{"session_id", id}, {"phase", tutor::phase_id(s.phase)}, {"assistant_messages", json::array()}};
    for (const auto& m : s.transcript)
        if (m.role == Role::Assistant) out["assistant_messages"].push_back(tutor::redact_solution(m.text, s));
    return json_response(201, out);
}

HttpResponse TutorService::advance(const std::string& id) {
    auto lock = session_lock(id);
    std::lock_guard guard(*lock);
    auto s = load(id);
    if (!s) return error_response(404, "session_not_found", "no such session");
    Session current = refresh(id, std::move(*s));
    tutor::Outcome o = engine_.advance(current);
    auto messages = o.assistant_messages;
    Session next = commit(id, std::move(o));
    return json_response(200, json{{"phase", tutor::phase_id(next.phase)}, {"assistant_messages", messages_json(messages)}});
}

HttpResponse TutorService::answer(const std::string& id, const HttpRequest& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("answer") || !body["answer"].is_string())
        return error_response(400, "invalid_request", "body must be {\"answer\": string}");
    auto lock = session_lock(id);
    std::lock_guard guard(*lock);
    auto s = load(id);
    if (!s) return error_response(404, "session_not_found", "no such session");
    Session current = refresh(id, std::move(*s));
    tutor::Outcome o = engine_.submit_answer(current, body["answer"].get<std::string>());
    auto messages = o.assistant_messages;
    tutor::Judgment judgment = *o.judgment;
    Session next = commit(id, std::move(o));
    json out{{"verdict", tutor::verdict_id(judgment.verdict)},
             {"checker", tutor::checker_id(judgment.checker)},
             {"phase", tutor::phase_id(next.phase)},
             {"attempts", next.attempts},
             {"assistant_messages", messages_json(messages)}};
    if (judgment.verdict == tutor::Verdict::Correct) {
        auto reward = tutor::release_reward(next);
        out["reward"] = {{"steps", reward.steps}, {"final_answer", reward.final_answer}};
    }
    return json_response(200, out);
}

HttpResponse TutorService::get(const std::string& id) {
    auto lock = session_lock(id);
    std::lock_guard guard(*lock);
    auto s = load(id);
    if (!s) return error_response(404, "session_not_found", "no such session");
    return json_response(200, session_view(*s));
}

struct HttpServer::Impl {
    TutorService& service;
    httplib::Server server;

    explicit Impl(TutorService& s) : service(s) {
        server.set_payload_max_length(16 * 1024 * 1024);
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            HttpRequest r{req.method, req.path, req.body, req.get_header_value("Idempotency-Key"), req.remote_addr};
            HttpResponse out = service.handle(r);
            res.status = out.status;
            for (const auto& [k, v] : out.headers)
                if (k != "Content-Type") res.set_header(k, v);
            res.set_content(out.body, "application/json");
        };
        server.Get(".*", handler);
        server.Post(".*", handler);
        server.Put(".*", handler);
        server.Delete(".*", handler);
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return;
            std::string code = res.status == 413 ? "payload_too_large" : "http_error";
            res.set_content(json{{"error", {{"code", code}, {"message", httplib::status_message(res.status)}}}}.dump(),
                            "application/json");
        });
    }
};

HttpServer::HttpServer(TutorService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    if (!impl_->server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }

}  // namespace mega::api
