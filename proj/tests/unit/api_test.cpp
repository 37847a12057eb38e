#include <gtest/gtest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <thread>

#include "mega/api/service.hpp"
#include "mega/api/store.hpp"
#include "mega/bank/problem_bank.hpp"
#include "mega/llm/image.hpp"
#include "mega/mathcheck/mentions.hpp"
#include "mega/mathcheck/oracle.hpp"

using namespace mega;
using namespace mega::api;
using llm::ScriptRecord;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mega_api_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<ScriptRecord> happy_script(int copies = 1) {
    std::vector<ScriptRecord> out;
    for (int i = 0; i < copies; ++i) {
        out.push_back({"identification", "", "Category: Linear Equation\nA linear equation in x."});
        out.push_back({"reinforcement", "", "Walkthrough: subtract the constant, then divide."});
        out.push_back({"challenge", "", "Your turn. Give it a try!"});
        out.push_back({"reward", "", "Subtract 4 from both sides: 2x = 6.\nDivide by 2.\nAnswer: x = 3"});
    }
    return out;
}

std::vector<tutor::Event> events_of(int from, int to) {
    std::vector<tutor::Event> out;
    for (int i = from; i <= to; ++i)
        out.push_back({i, 1000 + i, i == 1 ? tutor::EventKind::SessionOpened : tutor::EventKind::PhaseChanged,
                       json{{"n", i}}});
    return out;
}

class ServiceTest : public ::testing::Test {
protected:
    explicit ServiceTest(std::vector<ScriptRecord> script = happy_script(4)) : backend(std::move(script)) {}

    HttpResponse call(const std::string& method, const std::string& path, const std::string& body = "",
                      const std::string& key = "") {
        return service.handle({method, path, body, key, "127.0.0.1"});
    }
    json body_of(const HttpResponse& r) { return json::parse(r.body); }
    std::string start(const std::string& text = "Solve 2x + 4 = 10") {
        auto r = call("POST", "/sessions", json{{"text", text}}.dump());
        EXPECT_EQ(r.status, 201) << r.body;
        return body_of(r)["session_id"];
    }
    std::string challenge_answer(const std::string& id) {
        json view = body_of(call("GET", "/sessions/" + id));
        Problem c;
        c.statement = view["challenge"].get<std::string>();
        c.category = bank::classify(c.statement);
        return mathcheck::format_answer(mathcheck::solve_oracle(c));
    }

    llm::ScriptedBackend backend;
    tutor::ManualClock clock{5'000'000};
    tutor::TutorEngine engine{backend, tutor::TutorConfig{}, clock};
    MemorySessionStore store;
    TutorService service{engine, store, ServiceOptions{0, 1, std::nullopt}};
};

}  // namespace

TEST(FileStore, AppendAndLoad) {
    auto dir = temp_dir("append");
    FileSessionStore store(dir);
    store.append("abc", events_of(1, 3));
    store.append("abc", events_of(4, 5));
    auto rec = store.load("abc");
    ASSERT_TRUE(rec);
    ASSERT_EQ(rec->events.size(), 5u);
    EXPECT_EQ(rec->events[4].seq, 5);
    EXPECT_EQ(rec->created_at_ms, 1001);
    EXPECT_FALSE(store.load("missing"));
    EXPECT_EQ(store.list(), std::vector<std::string>{"abc"});
    FileSessionStore reopened(dir);
    EXPECT_EQ(reopened.load("abc")->events.size(), 5u);
}

TEST(FileStore, RejectsGapsAndRewrites) {
    FileSessionStore store(temp_dir("gaps"));
    store.append("s", events_of(1, 2));
    EXPECT_THROW(store.append("s", events_of(4, 4)), std::invalid_argument);
    EXPECT_THROW(store.append("s", events_of(2, 3)), std::invalid_argument);
    EXPECT_EQ(store.load("s")->events.size(), 2u);
}

TEST(FileStore, TornTailIgnoredThenTruncated) {
    auto dir = temp_dir("torn");
    FileSessionStore store(dir);
    store.append("s", events_of(1, 2));
    auto log = dir / "sessions" / "s.log";
    {
        std::ofstream out(log, std::ios::app);
        out << to_json(events_of(3, 3)[0]).dump() << "\n{\"seq\":4,\"ts\":";
    }
    EXPECT_EQ(store.load("s")->events.size(), 2u);
    store.append("s", events_of(3, 4));
    auto rec = FileSessionStore(dir).load("s");
    ASSERT_EQ(rec->events.size(), 4u);
    EXPECT_EQ(rec->events[3].seq, 4);
}

TEST(MemoryStore, MirrorsFileStore) {
    MemorySessionStore store;
    store.append("s", events_of(1, 3));
    EXPECT_THROW(store.append("s", events_of(3, 3)), std::invalid_argument);
    EXPECT_EQ(store.load("s")->events.size(), 3u);
    EXPECT_FALSE(store.load("t"));
}

TEST(Idempotency, PersistsAcrossReopen) {
    auto file = temp_dir("idem") / "idempotency.jsonl";
    {
        IdempotencyLog log(file);
        log.put("k1", "v1");
        EXPECT_EQ(log.find("k1"), "v1");
    }
    IdempotencyLog again(file);
    EXPECT_EQ(again.find("k1"), "v1");
    EXPECT_FALSE(again.find("k2"));
}

TEST(ApiErrors, EveryEngineErrorHasOneCode) {
    EXPECT_EQ(api_error_for(Errc::EmptyInput, "").http_status, 400);
    EXPECT_EQ(api_error_for(Errc::OversizeImage, "").http_status, 413);
    EXPECT_EQ(api_error_for(Errc::IllegalPhase, "").code, "illegal_phase");
    EXPECT_EQ(api_error_for(Errc::IllegalPhase, "").http_status, 409);
    EXPECT_EQ(api_error_for(Errc::EmptyAnswer, "").http_status, 400);
    EXPECT_EQ(api_error_for(Errc::ScriptExhausted, "").http_status, 502);
    EXPECT_EQ(api_error_for(Errc::Timeout, "").code, "backend_timeout");
}

TEST(Config, FromEnvironment) {
    std::map<std::string, std::string> vars{{"PORT", "9000"},          {"DATA_DIR", "/tmp/x"},
                                            {"BACKEND", "remote"},     {"MODEL_NAME", "m"},
                                            {"API_KEY_ENV", "MY_KEY"}, {"SESSION_TTL_SECONDS", "60"},
                                            {"MEGA_ID_SEED", "4"}};
    auto env = [&](const char* name) -> const char* {
        auto it = vars.find(name);
        return it == vars.end() ? nullptr : it->second.c_str();
    };
    ServiceConfig c = config_from_env(env);
    EXPECT_EQ(c.port, 9000);
    EXPECT_EQ(c.data_dir, "/tmp/x");
    EXPECT_EQ(c.backend.kind, llm::BackendKind::Remote);
    EXPECT_EQ(c.backend.model_name, "m");
    EXPECT_EQ(c.backend.api_key_ref, "MY_KEY");
    EXPECT_EQ(c.session_ttl_seconds, 60);
    EXPECT_EQ(c.id_seed, 4u);
    vars["PORT"] = "abc";
    EXPECT_THROW(config_from_env(env), std::invalid_argument);
    vars["PORT"] = "1";
    vars["BACKEND"] = "carrier-pigeon";
    EXPECT_THROW(config_from_env(env), std::invalid_argument);
}

TEST_F(ServiceTest, CreateTextSession) {
    auto r = call("POST", "/sessions", R"({"text":"Solve 2x+4=10"})");
    ASSERT_EQ(r.status, 201) << r.body;
    json b = body_of(r);
    EXPECT_EQ(b["phase"], "identification");
    EXPECT_EQ(b["session_id"].get<std::string>().size(), 32u);
    ASSERT_EQ(b["assistant_messages"].size(), 1u);
    EXPECT_NE(b["assistant_messages"][0].get<std::string>().find("Linear Equation"), std::string::npos);
}

TEST_F(ServiceTest, CreateValidation) {
    EXPECT_EQ(call("POST", "/sessions", "{}").status, 400);
    EXPECT_EQ(call("POST", "/sessions", "not json").status, 400);
    EXPECT_EQ(call("POST", "/sessions", R"({"text":"x","image_base64":"TWFu","mime":"image/png"})").status, 400);
    EXPECT_EQ(call("POST", "/sessions", R"({"image_base64":"TWFu"})").status, 400);
    auto empty = call("POST", "/sessions", R"({"text":"   "})");
    EXPECT_EQ(empty.status, 400);
    EXPECT_EQ(body_of(empty)["error"]["code"], "empty_input");
    auto bad = call("POST", "/sessions", R"({"image_base64":"TWFu","mime":"image/png"})");
    EXPECT_EQ(body_of(bad)["error"]["code"], "undecodable_image");
    auto gif = call("POST", "/sessions", R"({"image_base64":"TWFu","mime":"image/gif"})");
    EXPECT_EQ(body_of(gif)["error"]["code"], "unsupported_mime");
}

TEST_F(ServiceTest, OversizeImageIs413) {
    std::vector<std::uint8_t> bytes(llm::kMaxImageBytes + 1, 0);
    const std::uint8_t sig[] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::copy(std::begin(sig), std::end(sig), bytes.begin());
    auto r = call("POST", "/sessions", json{{"image_base64", llm::base64_encode(bytes)}, {"mime", "image/png"}}.dump());
    EXPECT_EQ(r.status, 413);
    EXPECT_EQ(body_of(r)["error"]["code"], "oversize_image");
}

TEST_F(ServiceTest, ImageSessionTranscript) {
    std::ifstream in(std::filesystem::path(MEGA_SOURCE_DIR) / "data/golden/images/lin-01.png", std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    ASSERT_FALSE(bytes.empty());
    llm::ScriptedBackend b2({{"identification", "", "Problem: Solve 3x - 2 = 7\nCategory: Linear Equation"}});
    tutor::TutorEngine e2(b2, {}, clock);
    MemorySessionStore s2;
    TutorService svc(e2, s2, ServiceOptions{0, 1, std::nullopt});
    auto r = svc.handle({"POST", "/sessions", json{{"image_base64", llm::base64_encode(bytes)}, {"mime", "image/png"}}.dump(), "", "ip"});
    ASSERT_EQ(r.status, 201) << r.body;
    std::string id = json::parse(r.body)["session_id"];
    json view = json::parse(svc.handle({"GET", "/sessions/" + id, "", "", "ip"}).body);
    EXPECT_EQ(view["category"], "linear_equation");
    EXPECT_EQ(view["transcript"][0]["attachment"], true);
    EXPECT_NE(view["transcript"][1]["text"].get<std::string>().find("Problem:"), std::string::npos);
}

TEST_F(ServiceTest, AdvanceThroughPhases) {
    std::string id = start();
    auto a1 = call("POST", "/sessions/" + id + "/advance");
    ASSERT_EQ(a1.status, 200) << a1.body;
    EXPECT_EQ(body_of(a1)["phase"], "reinforcement");
    auto a2 = call("POST", "/sessions/" + id + "/advance");
    EXPECT_EQ(body_of(a2)["phase"], "challenge");
    auto a3 = call("POST", "/sessions/" + id + "/advance");
    EXPECT_EQ(a3.status, 409);
    EXPECT_EQ(body_of(a3)["error"]["code"], "illegal_phase");
    EXPECT_EQ(call("POST", "/sessions/0123456789abcdef0123456789abcdef/advance").status, 404);
}

TEST_F(ServiceTest, AnswersWrongThenCorrect) {
    std::string id = start();
    EXPECT_EQ(call("POST", "/sessions/" + id + "/answers", R"({"answer":"1"})").status, 409);
    call("POST", "/sessions/" + id + "/advance");
    call("POST", "/sessions/" + id + "/advance");
    EXPECT_EQ(call("POST", "/sessions/" + id + "/answers", R"({"answer":"  "})").status, 400);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/answers", R"({"reply":"1"})").status, 400);

    std::string good = challenge_answer(id);
    auto wrong = call("POST", "/sessions/" + id + "/answers", json{{"answer", good + " + 100"}}.dump());
    ASSERT_EQ(wrong.status, 200) << wrong.body;
    EXPECT_EQ(body_of(wrong)["verdict"], "incorrect");
    EXPECT_FALSE(body_of(wrong).contains("reward"));
    EXPECT_EQ(body_of(wrong)["attempts"], 1);

    json before = body_of(call("GET", "/sessions/" + id));
    EXPECT_FALSE(before.contains("reward"));
    EXPECT_EQ(before["attempts"], 1);

    auto right = call("POST", "/sessions/" + id + "/answers", json{{"answer", good}}.dump());
    ASSERT_EQ(right.status, 200) << right.body;
    json rb = body_of(right);
    EXPECT_EQ(rb["verdict"], "correct");
    EXPECT_EQ(rb["phase"], "reward_released");
    EXPECT_EQ(rb["reward"]["final_answer"], "3");

    json after = body_of(call("GET", "/sessions/" + id));
    EXPECT_EQ(after["reward"]["final_answer"], "3");
    EXPECT_EQ(after["phase"], "reward_released");
    EXPECT_EQ(call("POST", "/sessions/" + id + "/answers", json{{"answer", good}}.dump()).status, 409);
}

TEST_F(ServiceTest, GetPresentAbsentUnknown) {
    std::string id = start();
    auto r = call("GET", "/sessions/" + id);
    ASSERT_EQ(r.status, 200);
    json v = body_of(r);
    EXPECT_EQ(v["phase"], "identification");
    EXPECT_EQ(v["attempts"], 0);
    EXPECT_EQ(v["seq"], 4);
    EXPECT_FALSE(v.contains("reward"));
    for (const auto& m : v["transcript"]) EXPECT_NE(m["role"], "system");
    EXPECT_EQ(call("GET", "/sessions/ffffffffffffffffffffffffffffffff").status, 404);
    EXPECT_EQ(body_of(call("GET", "/sessions/nope"))["error"]["code"], "session_not_found");
}

TEST_F(ServiceTest, RoutingErrors) {
    EXPECT_EQ(call("GET", "/healthz").status, 200);
    EXPECT_EQ(call("GET", "/elsewhere").status, 404);
    EXPECT_EQ(call("GET", "/sessions").status, 405);
    EXPECT_EQ(call("DELETE", "/sessions/0123456789abcdef0123456789abcdef").status, 405);
}

TEST_F(ServiceTest, IdempotentCreate) {
    auto first = call("POST", "/sessions", R"({"text":"Solve 2x + 4 = 10"})", "key-1");
    auto second = call("POST", "/sessions", R"({"text":"Solve 2x + 4 = 10"})", "key-1");
    EXPECT_EQ(first.status, 201);
    EXPECT_EQ(second.status, first.status);
    EXPECT_EQ(second.body, first.body);
    EXPECT_EQ(store.list().size(), 1u);
    call("POST", "/sessions", R"({"text":"Solve 2x + 4 = 10"})", "key-2");
    EXPECT_EQ(store.list().size(), 2u);
}

TEST_F(ServiceTest, IdempotentAnswerDoesNotCountTwice) {
    std::string id = start();
    call("POST", "/sessions/" + id + "/advance");
    call("POST", "/sessions/" + id + "/advance");
    auto a = call("POST", "/sessions/" + id + "/answers", R"({"answer":"123456"})", "k");
    auto b = call("POST", "/sessions/" + id + "/answers", R"({"answer":"123456"})", "k");
    EXPECT_EQ(a.body, b.body);
    EXPECT_EQ(body_of(call("GET", "/sessions/" + id))["attempts"], 1);
}

TEST(ServiceLimits, PerIpCap) {
    llm::ScriptedBackend backend(happy_script());
    tutor::SystemClock clock;
    tutor::TutorEngine engine(backend, {}, clock);
    MemorySessionStore store;
    TutorService svc(engine, store, ServiceOptions{3, 1, std::nullopt});
    for (int i = 0; i < 3; ++i) EXPECT_EQ(svc.handle({"GET", "/healthz", "", "", "a"}).status, 200);
    EXPECT_EQ(svc.handle({"GET", "/healthz", "", "", "a"}).status, 429);
    EXPECT_EQ(svc.handle({"GET", "/healthz", "", "", "b"}).status, 200);
}

TEST(ServiceLimits, BackendFailureIs502AndNothingPersists) {
    llm::ScriptedBackend backend({{"identification", "", "", llm::Finish::Complete, "timeout"}});
    tutor::SystemClock clock;
    tutor::TutorEngine engine(backend, {}, clock);
    MemorySessionStore store;
    TutorService svc(engine, store, ServiceOptions{0, 1, std::nullopt});
    auto r = svc.handle({"POST", "/sessions", R"({"text":"Solve x + 1 = 2"})", "", "a"});
    EXPECT_EQ(r.status, 502);
    EXPECT_EQ(json::parse(r.body)["error"]["code"], "backend_timeout");
    EXPECT_TRUE(store.list().empty());
    auto exhausted = svc.handle({"POST", "/sessions", R"({"text":"Solve x + 1 = 2"})", "", "a"});
    EXPECT_EQ(json::parse(exhausted.body)["error"]["code"], "script_exhausted");
}

TEST(ServiceLimits, DeterministicIds) {
    auto run = [] {
        llm::ScriptedBackend backend(happy_script());
        tutor::ManualClock clock(0);
        tutor::TutorEngine engine(backend, {}, clock);
        MemorySessionStore store;
        TutorService svc(engine, store, ServiceOptions{0, 42, std::nullopt});
        return svc.handle({"POST", "/sessions", R"({"text":"Solve 2x + 4 = 10"})", "", "a"}).body;
    };
    EXPECT_EQ(run(), run());
}

TEST_F(ServiceTest, NoEndpointLeaksBeforeReward) {
    std::string id = start("Solve 5x - 7 = 28");
    mathcheck::AnswerForm reference = mathcheck::parse_answer("7");
    std::vector<std::string> bodies;
    auto record = [&](const HttpResponse& r) { bodies.push_back(r.body); };
    record(call("GET", "/sessions/" + id));
    record(call("POST", "/sessions/" + id + "/advance"));
    record(call("GET", "/sessions/" + id));
    record(call("POST", "/sessions/" + id + "/advance"));
    record(call("GET", "/sessions/" + id));
    record(call("POST", "/sessions/" + id + "/answers", R"({"answer":"x = 0.5"})"));
    record(call("GET", "/sessions/" + id));
    for (const auto& b : bodies) {
        json j = json::parse(b);
        std::function<void(const json&)> scan = [&](const json& node) {
            if (node.is_string()) {
                const std::string s = node.get<std::string>();
                if (s.find("5x - 7 = 28") != std::string::npos) return;
                EXPECT_TRUE(mathcheck::find_answer_mentions(s, reference).empty()) << s;
            } else if (node.is_structured()) {
                for (const auto& child : node) scan(child);
            }
        };
        scan(j);
    }
}

TEST(HttpServerTest, ServesOverHttp) {
    llm::ScriptedBackend backend(happy_script());
    tutor::SystemClock clock;
    tutor::TutorEngine engine(backend, {}, clock);
    auto dir = temp_dir("http");
    FileSessionStore store(dir);
    TutorService svc(engine, store, ServiceOptions{0, 9, dir / "idempotency.jsonl"});
    HttpServer server(svc);
    int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    for (int i = 0; i < 50 && !client.Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    auto created = client.Post("/sessions", R"({"text":"Solve 2x + 4 = 10"})", "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    std::string id = json::parse(created->body)["session_id"];
    auto got = client.Get("/sessions/" + id);
    ASSERT_TRUE(got);
    EXPECT_EQ(got->status, 200);
    EXPECT_EQ(got->get_header_value("Content-Type"), "application/json");
    httplib::Headers h{{"Idempotency-Key", "abc"}};
    auto p1 = client.Post("/sessions/" + id + "/advance", h, "", "application/json");
    auto p2 = client.Post("/sessions/" + id + "/advance", h, "", "application/json");
    ASSERT_TRUE(p1 && p2);
    EXPECT_EQ(p1->body, p2->body);
    server.stop();
    t.join();
    EXPECT_EQ(FileSessionStore(dir).load(id)->events.size(), 8u);
}
