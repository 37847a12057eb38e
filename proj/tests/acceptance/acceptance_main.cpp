// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures. `--only NAME` runs a single criterion.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mega/api/service.hpp"
#include "mega/api/store.hpp"
#include "mega/bank/problem_bank.hpp"
#include "mega/error.hpp"
#include "mega/eval/eval.hpp"
#include "mega/llm/image.hpp"
#include "mega/mathcheck/answer.hpp"
#include "mega/mathcheck/expr.hpp"
#include "mega/mathcheck/mentions.hpp"
#include "mega/mathcheck/oracle.hpp"
#include "mega/prompt/prompt_kit.hpp"
#include "mega/tutor/engine.hpp"
#include "support/expr_gen.hpp"

extern char** environ;

namespace {

using namespace mega;
using nlohmann::json;
namespace fs = std::filesystem;

struct Result {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double limit_s;
    std::function<Result()> run;
};

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("mega_acceptance_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---- processes

struct Child {
    pid_t pid = -1;
    int out_fd = -1;
};

Child spawn(const std::vector<std::string>& args, const std::vector<std::string>& env, bool capture_stdout) {
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    std::vector<std::string> env_strings = env;
    if (const char* path = std::getenv("PATH")) env_strings.push_back(std::string("PATH=") + path);
    std::vector<char*> envp;
    for (const auto& e : env_strings) envp.push_back(const_cast<char*>(e.c_str()));
    envp.push_back(nullptr);

    int pipefd[2] = {-1, -1};
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    if (capture_stdout) {
        if (::pipe(pipefd) != 0) throw std::runtime_error("pipe failed");
        posix_spawn_file_actions_adddup2(&actions, pipefd[1], STDOUT_FILENO);
        posix_spawn_file_actions_addclose(&actions, pipefd[0]);
        posix_spawn_file_actions_addclose(&actions, pipefd[1]);
    }
    Child c;
    int rc = posix_spawn(&c.pid, argv[0], &actions, nullptr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    if (capture_stdout) {
        ::close(pipefd[1]);
        c.out_fd = pipefd[0];
    }
    if (rc != 0) throw std::runtime_error("cannot spawn " + args[0] + ": " + std::strerror(rc));
    return c;
}

int wait_exit(pid_t pid, bool* killed = nullptr) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (killed) *killed = WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_tool(const std::vector<std::string>& args) { return wait_exit(spawn(args, {}, false).pid); }

struct Server {
    Child child;
    int port = 0;

    static Server start(const fs::path& data_dir, const fs::path& script, long crash_after) {
        std::vector<std::string> env{"PORT=0",
                                     "HOST=127.0.0.1",
                                     "DATA_DIR=" + data_dir.string(),
                                     "BACKEND=scripted",
                                     "SCRIPT_PATH=" + script.string(),
                                     "MEGA_ID_SEED=1",
                                     "RATE_LIMIT_PER_MINUTE=0",
                                     "SPDLOG_LEVEL=warn"};
        if (crash_after > 0) env.push_back("MEGA_CRASH_AFTER_EVENTS=" + std::to_string(crash_after));
        Server s;
        s.child = spawn({MEGA_SERVER_BIN}, env, true);
        std::string line;
        char ch = 0;
        while (::read(s.child.out_fd, &ch, 1) == 1 && ch != '\n') line += ch;
        if (line.rfind("listening on ", 0) != 0) throw std::runtime_error("server did not start: " + line);
        s.port = std::stoi(line.substr(13));
        return s;
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(10, 0);
        return c;
    }

    // Returns true when the process died from SIGKILL.
    bool finish(bool expect_crash) {
        for (int i = 0; expect_crash && i < 250; ++i) {
            int status = 0;
            if (::waitpid(child.pid, &status, WNOHANG) == child.pid) {
                ::close(child.out_fd);
                return WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL;
            }
            ::usleep(20'000);
        }
        ::kill(child.pid, SIGTERM);
        bool killed = false;
        wait_exit(child.pid, &killed);
        ::close(child.out_fd);
        return killed;
    }
};

// ---- leak scanning

std::string strip_statement(std::string text, const std::string& statement) {
    for (const std::string& s : {statement, prompt::normalize_notation(statement)}) {
        if (s.empty()) continue;
        for (auto pos = text.find(s); pos != std::string::npos; pos = text.find(s)) text.erase(pos, s.size());
    }
    return text;
}

int count_leaks(const json& node, const std::string& statement, const mathcheck::AnswerForm& reference,
                std::string* example) {
    if (node.is_string()) {
        std::string text = strip_statement(node.get<std::string>(), statement);
        if (mathcheck::find_answer_mentions(text, reference).empty()) return 0;
        if (example && example->empty()) *example = node.get<std::string>();
        return 1;
    }
    int n = 0;
    if (node.is_structured())
        for (const auto& child : node) n += count_leaks(child, statement, reference, example);
    return n;
}

std::string decimal_of(const mathcheck::AnswerForm& form) {
    if (const auto* s = std::get_if<mathcheck::Scalar>(&form)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", mathcheck::evaluate(*s->value));
        return buf;
    }
    return mathcheck::format_answer(form);
}

// ---- criteria

Result gate_safety() {
    const auto& golden = bank::bundled_golden_set();
    const std::vector<std::string> unknown_statements{
        "How many edges does a cube have?", "Prove that the sum of two odd numbers is even.",
        "Estimate the number of minutes in a week."};
    std::mt19937_64 rng(0x6a7465u);
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };

    const int traces = 10000;
    long requests = 0, leaks = 0, reward_mismatches = 0, rewards = 0, masked = 0;
    std::string example;
    tutor::ManualClock clock(1'000'000);

    for (int t = 0; t < traces; ++t) {
        std::string statement;
        mathcheck::AnswerForm reference;
        bool open = false;
        if (pick(20) == 0) {
            statement = unknown_statements[static_cast<std::size_t>(pick(3))];
            reference = mathcheck::parse_answer("42");
            open = true;
        } else {
            const auto& base = golden[static_cast<std::size_t>(pick(static_cast<int>(golden.size())))];
            Problem p = base.problem;
            if (pick(2) == 0) {
                bank::GenerationSpec spec;
                spec.seed = rng();
                spec.difficulty = bank::Difficulty::Matched;
                p = bank::generate_challenge(base.problem, spec);
            }
            statement = p.statement;
            reference = mathcheck::solve_oracle(p);
        }
        const std::string ref_text = mathcheck::format_answer(reference);
        const std::vector<std::string> leaks_in{"So the answer is " + ref_text + ".", "x = " + ref_text,
                                                "x=" + ref_text, "result:   " + ref_text + "  ",
                                                "roughly " + decimal_of(reference)};
        auto leak = [&] { return leaks_in[static_cast<std::size_t>(pick(static_cast<int>(leaks_in.size())))]; };

        std::vector<llm::ScriptRecord> script;
        auto add = [&](const std::string& phase, const std::string& reply) {
            llm::ScriptRecord r;
            r.phase = phase;
            r.reply = reply;
            if (pick(10) == 0) {
                llm::ScriptRecord broken = r;
                if (pick(2) == 0) {
                    broken.error = "timeout";
                } else {
                    broken.finish = llm::Finish::Truncated;
                    broken.reply = "Partial: " + leak();
                }
                script.push_back(broken);
            }
            script.push_back(r);
        };
        for (int copy = 0; copy < 3; ++copy) {
            add("identification", "Category: " + std::string(open ? "something else" : "see below") + "\n" + leak());
            add("reference", "Answer: 42");
            add("reinforcement", "Problem: Another case\nWorked through: " + leak());
            add("challenge", "Problem: Try this variant\n" + leak());
            add("challenge_reference", "Answer: 17");
            add("reward", "Step: isolate the unknown.\nAnswer: " + ref_text);
        }
        llm::ScriptedBackend backend(script);
        tutor::TutorEngine engine(backend, tutor::TutorConfig{}, clock);
        api::MemorySessionStore store;
        api::TutorService service(engine, store, api::ServiceOptions{0, static_cast<std::uint64_t>(t) + 1, std::nullopt});

        auto call = [&](const std::string& method, const std::string& path, const std::string& body) {
            ++requests;
            return service.handle({method, path, body, "", "10.0.0.1"});
        };

        std::string id;
        bool released = false;
        auto check = [&](const api::HttpResponse& r, bool is_answer) {
            json body = json::parse(r.body);
            const bool releases = is_answer && r.status == 200 && body["verdict"] == "correct";
            if (!released && !releases) {
                leaks += count_leaks(body, statement, reference, &example);
                masked += r.body.find(tutor::kMask) != std::string::npos ? 1 : 0;
            }
            released = released || releases;
            if (is_answer && r.status == 200 && body.contains("reward") != (body["verdict"] == "correct")) ++reward_mismatches;
        };

        auto created = call("POST", "/sessions", json{{"text", statement}}.dump());
        check(created, false);
        if (created.status == 201) id = json::parse(created.body)["session_id"];
        const int steps = 4 + pick(11);
        for (int s = 0; s < steps; ++s) {
            const std::string base_path = "/sessions/" + (id.empty() ? std::string(32, '0') : id);
            api::HttpResponse r;
            bool is_answer = false;
            switch (pick(10)) {
                case 0:
                case 1:
                case 2:
                    r = call("POST", base_path + "/advance", "");
                    break;
                case 3:
                case 4: {
                    std::string answer = "5";
                    if (auto rec = store.load(id)) {
                        auto session = tutor::replay(rec->events);
                        if (session.challenge && session.challenge->reference)
                            answer = mathcheck::format_answer(*session.challenge->reference);
                        else if (session.challenge_reference_text)
                            answer = *session.challenge_reference_text;
                    }
                    r = call("POST", base_path + "/answers", json{{"answer", answer}}.dump());
                    is_answer = true;
                    break;
                }
                case 5:
                case 6: {
                    const std::vector<std::string> wrong{"1000", ref_text, "x = -77", "banana", "  2.5 "};
                    r = call("POST", base_path + "/answers", json{{"answer", wrong[static_cast<std::size_t>(pick(5))]}}.dump());
                    is_answer = true;
                    break;
                }
                case 7: {
                    const std::vector<std::pair<std::string, std::string>> bad{
                        {"/answers", R"({"answer": ""})"}, {"/answers", "{not json"}, {"/answers", R"({"reply": 3})"},
                        {"/advance", "garbage"}, {"/nowhere", "{}"}};
                    auto& b = bad[static_cast<std::size_t>(pick(5))];
                    r = call("POST", base_path + b.first, b.second);
                    is_answer = b.first == "/answers";
                    break;
                }
                case 8:
                    r = call("POST", "/sessions", pick(2) ? "{}" : R"({"text":"x","image_base64":"AA==","mime":"image/png"})");
                    break;
                default:
                    r = call("GET", base_path, "");
                    break;
            }
            check(r, is_answer);
        }

        if (!id.empty()) {
            auto view = json::parse(call("GET", "/sessions/" + id, "").body);
            bool any_correct = false;
            for (const auto& j : view["judgments"]) any_correct = any_correct || j["verdict"] == "correct";
            if (view.contains("reward") != any_correct) ++reward_mismatches;
            auto session = tutor::replay(store.load(id)->events);
            if (session.reward.has_value() != any_correct) ++reward_mismatches;
            rewards += any_correct ? 1 : 0;
            if (!released) leaks += count_leaks(view, statement, reference, &example);
        }
    }
    std::ostringstream d;
    d << traces << " traces, " << requests << " requests, " << rewards << " rewards, " << leaks
      << " pre-reward leaks (" << masked << " responses carried masked attempts), " << reward_mismatches << " reward/verdict mismatches";
    if (!example.empty()) d << "; first leak: \"" << example << "\"";
    return {leaks == 0 && reward_mismatches == 0 && rewards > 0 && masked > 0, d.str()};
}

Result oracle_soundness() {
    int total = 0, passed = 0;
    std::string first_failure;
    for (Category c : kCheckableCategories) {
        auto bases = bank::golden_set(c);
        for (int i = 0; i < 1000; ++i) {
            bank::GenerationSpec spec;
            spec.seed = static_cast<std::uint64_t>(i) * 7919u + 1;
            spec.difficulty = i % 2 ? bank::Difficulty::Matched : bank::Difficulty::Simpler;
            const Problem& base = bases[static_cast<std::size_t>(i) % bases.size()];
            ++total;
            try {
                Problem p = i % 2 ? bank::generate_challenge(base, spec) : bank::generate_analog(base, spec);
                auto answer = mathcheck::solve_oracle(p);
                bool ok = mathcheck::satisfies(p, answer, 1e-9) && p.reference && mathcheck::equivalent(answer, *p.reference);
                if (ok)
                    ++passed;
                else if (first_failure.empty())
                    first_failure = p.statement;
            } catch (const std::exception& e) {
                if (first_failure.empty()) first_failure = e.what();
            }
        }
    }
    std::ostringstream d;
    d << passed << "/" << total << " generated problems satisfied at 1e-9";
    if (!first_failure.empty()) d << "; first failure: " << first_failure;
    return {passed == total && total == 6000, d.str()};
}

Result equivalence_agreement() {
    testkit::ExprGenerator gen(0x5eed);
    mathcheck::EquivalencePolicy policy;
    policy.mode = mathcheck::EquivalenceMode::Numeric;
    policy.tolerance = 1e-9;
    int false_negatives = 0, false_positives = 0, triples = 0, inequivalent = 0;
    for (int i = 0; i < 1000; ++i) {
        auto e = gen.expr(1 + gen.uniform(0, 2));
        auto same = gen.equivalent_rewrite(e);
        auto other = gen.perturb(e);
        auto parsed = mathcheck::parse_expression(testkit::text_of(*e));
        ++triples;
        for (const auto& candidate : {same, other}) {
            bool oracle = testkit::dense_oracle_equivalent(*e, *candidate, 1e-9, 1000);
            bool checked =
                mathcheck::check_equivalence(*parsed, *mathcheck::parse_expression(testkit::text_of(*candidate)), policy).equivalent;
            if (!oracle) ++inequivalent;
            if (oracle && !checked) ++false_negatives;
            if (!oracle && checked) ++false_positives;
        }
    }
    std::ostringstream d;
    d << triples << " triples (" << inequivalent << " inequivalent pairs), " << false_negatives << " false negatives, "
      << false_positives << " false positives";
    return {false_negatives == 0 && false_positives == 0, d.str()};
}

Result category_report_ratios() {
    fs::path dir = scratch("ratios");
    const std::string script = (dir / "script.jsonl").string(), csv = (dir / "report.csv").string(),
                      table = (dir / "report.txt").string();
    if (run_tool({MEGA_SCRIPT_BIN, "ratios", "--targets", "reported", "--trials", "100", "--seed", "11", "--out", script}) != 0)
        return {false, "mega-script failed"};
    int rc_csv = run_tool({MEGA_EVAL_BIN, "--backend", "scripted", "--script", script, "--trials", "100", "--seed", "11",
                           "--parallel", "4", "--format", "csv", "--out", csv});
    int rc_table = run_tool({MEGA_EVAL_BIN, "--backend", "scripted", "--script", script, "--trials", "100", "--seed", "11",
                             "--parallel", "4", "--format", "table", "--out", table});
    if (rc_csv != 0 || rc_table != 0) return {false, "mega-eval exited " + std::to_string(rc_csv) + "/" + std::to_string(rc_table)};

    std::ifstream in(csv);
    std::stringstream buf;
    buf << in.rdbuf();
    auto report = eval::parse_csv(buf.str());
    int matched = 0;
    std::string mismatch;
    for (const auto& [category, target] : eval::reference_targets()) {
        for (auto [type, want] : {std::pair{eval::InputType::Image, target.first}, std::pair{eval::InputType::Text, target.second}}) {
            auto pct = report.cell(category, type).percentage();
            if (pct && std::round(*pct * 10) == std::round(want * 10))
                ++matched;
            else if (mismatch.empty())
                mismatch = std::string(category_title(category)) + "/" + std::string(eval::input_type_name(type));
        }
    }

    std::ifstream tin(table);
    std::vector<std::string> lines;
    for (std::string line; std::getline(tin, line);) lines.push_back(line);
    bool shape = lines.size() >= 8 && lines[0].rfind("Problem Category", 0) == 0 &&
                 lines[0].find("| Input Type") != std::string::npos && lines[0].find("| Percentage (%)") != std::string::npos;
    int rows = 0;
    for (std::size_t i = 2; shape && i < 8; ++i) {
        const std::string title(category_title(kCheckableCategories[i - 2]));
        if (lines[i].rfind(title, 0) == 0 && lines[i].find("| Image, Text |") != std::string::npos) ++rows;
    }
    std::ostringstream d;
    d << matched << "/12 cells equal their configured percentage, table rows " << rows << "/6, gate violations "
      << report.totals().gate_violations;
    if (!mismatch.empty()) d << "; first mismatch " << mismatch;
    return {matched == 12 && rows == 6 && report.totals().gate_violations == 0, d.str()};
}

Result crash_replay() {
    fs::path dir = scratch("crash");
    fs::path script = dir / "script.jsonl";
    llm::save_script(script, {{"identification", "", "Category: Linear Equation\nA linear equation in one unknown."},
                              {"reinforcement", "", "Walkthrough: undo the addition, then the multiplication."},
                              {"challenge", "", "Your turn: solve the challenge problem."},
                              {"reward", "", "Subtract 4 from both sides.\nDivide by 2.\nAnswer: x = 3"}});

    struct Op {
        std::string path;
        std::string body;
    };
    // Event count after each operation: 4, 8, 12, 15, 20.
    std::vector<std::string> expected;
    std::vector<int> boundaries;
    std::string id, correct;
    auto ops = [&](const std::string& sid) {
        return std::vector<Op>{{"/sessions", R"({"text":"Solve 2x + 4 = 10"})"},
                               {"/sessions/" + sid + "/advance", ""},
                               {"/sessions/" + sid + "/advance", ""},
                               {"/sessions/" + sid + "/answers", R"({"answer":"1000"})"},
                               {"/sessions/" + sid + "/answers", json{{"answer", correct}}.dump()}};
    };

    {
        fs::path data = dir / "reference";
        Server s = Server::start(data, script, 0);
        auto c = s.client();
        auto created = c.Post("/sessions", R"({"text":"Solve 2x + 4 = 10"})", "application/json");
        if (!created || created->status != 201) return {false, "reference run could not create a session"};
        id = json::parse(created->body)["session_id"];
        auto record = [&] {
            auto got = c.Get("/sessions/" + id);
            expected.push_back(got ? got->body : "");
            boundaries.push_back(json::parse(expected.back())["seq"]);
        };
        record();
        for (std::size_t i = 1; i < 5; ++i) {
            if (i == 4) {
                auto session = tutor::replay(api::FileSessionStore(data).load(id)->events);
                correct = mathcheck::format_answer(*session.challenge->reference);
            }
            auto op = ops(id)[i];
            if (!c.Post(op.path, op.body, "application/json")) return {false, "reference run request failed"};
            record();
        }
        s.finish(false);
    }
    const int total_events = boundaries.back();
    if (total_events != 20) return {false, "reference session has " + std::to_string(total_events) + " events, not 20"};

    int identical = 0, crashes = 0;
    std::string problem;
    for (int k = 1; k <= total_events; ++k) {
        fs::path data = dir / ("crash_" + std::to_string(k));
        Server s = Server::start(data, script, k);
        {
            auto c = s.client();
            for (const auto& op : ops(id))
                if (!c.Post(op.path, op.body, "application/json")) break;
        }
        if (s.finish(true)) ++crashes;

        std::string want;
        for (std::size_t i = 0; i < boundaries.size(); ++i)
            if (boundaries[i] <= k) want = expected[i];
        bool all_same = true;
        for (int restart = 0; restart < 2; ++restart) {
            Server r = Server::start(data, script, 0);
            auto got = r.client().Get("/sessions/" + id);
            r.finish(false);
            bool same = got && (want.empty() ? got->status == 404 : got->status == 200 && got->body == want);
            if (!same && problem.empty()) problem = "after event " + std::to_string(k) + " restart " + std::to_string(restart);
            all_same = all_same && same;
        }
        identical += all_same ? 1 : 0;
    }
    std::ostringstream d;
    d << identical << "/" << total_events << " crash points replayed byte-identically (2 restarts each), " << crashes
      << " SIGKILLs observed";
    if (!problem.empty()) d << "; first difference " << problem;
    return {identical == total_events && crashes == total_events, d.str()};
}

Result redaction_corpus() {
    std::ifstream in(std::string(MEGA_TEST_DATA_DIR) + "/redaction_corpus.jsonl");
    int total = 0, masked = 0, intact = 0;
    std::string first_miss;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        json j = json::parse(line);
        tutor::Session s;
        s.original.statement = j["statement"];
        s.original.category = bank::classify(s.original.statement);
        s.original.reference = mathcheck::solve_oracle(s.original);
        const std::string text = j["text"];
        ++total;

        s.phase = tutor::Phase::Challenge;
        std::string pre = tutor::redact_solution(text, s);
        if (pre.find(tutor::kMask) != std::string::npos && mathcheck::find_answer_mentions(pre, *s.original.reference).empty())
            ++masked;
        else if (first_miss.empty())
            first_miss = text + " -> " + pre;

        s.phase = tutor::Phase::RewardReleased;
        if (tutor::redact_solution(text, s) == text) ++intact;
    }
    std::ostringstream d;
    d << masked << "/" << total << " masked pre-reward, " << intact << "/" << total << " intact post-reward";
    if (!first_miss.empty()) d << "; first miss: " << first_miss;
    return {total == 50 && masked == total && intact == total, d.str()};
}

Result base64_path() {
    const std::vector<std::pair<std::string, std::string>> vectors{
        {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
        {"Man", "TWFu"}, {"Ma", "TWE="}, {"M", "TQ=="}};
    int vector_ok = 0;
    if (llm::base64_encode(std::string_view()) == "") ++vector_ok;
    for (const auto& [plain, encoded] : vectors) {
        std::vector<std::uint8_t> bytes(plain.begin(), plain.end());
        auto image = llm::encode_image(bytes, "image/png");
        auto decoded = llm::base64_decode(encoded);
        if (image.encoded == encoded && decoded == bytes) ++vector_ok;
    }
    std::mt19937_64 rng(4648);
    int round_trips = 0;
    const std::uint8_t png[] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::uint8_t> bytes(1 + rng() % 600);
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
        if (i % 2) bytes.insert(bytes.begin(), std::begin(png), std::end(png));
        auto image = llm::encode_image(bytes, "image/png");
        bool ok = llm::base64_decode(image.encoded) == bytes;
        if (i % 2) ok = ok && llm::decode_image(image.encoded, "image/png") == image;
        round_trips += ok ? 1 : 0;
    }
    std::ostringstream d;
    d << vector_ok << "/" << vectors.size() + 1 << " RFC 4648 vectors, " << round_trips << "/1000 random round-trips";
    return {vector_ok == static_cast<int>(vectors.size()) + 1 && round_trips == 1000, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::string only;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--only" && i + 1 < argc) only = argv[++i];

    const std::vector<Criterion> criteria{
        {"gate_safety", 120, gate_safety},
        {"oracle_soundness", 30, oracle_soundness},
        {"equivalence_agreement", 120, equivalence_agreement},
        {"category_report_ratios", 60, category_report_ratios},
        {"crash_replay", 300, crash_replay},
        {"redaction_corpus", 60, redaction_corpus},
        {"base64", 60, base64_path},
    };
    signal(SIGPIPE, SIG_IGN);
    spdlog::set_level(spdlog::level::off);
    int failures = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && c.name != only) continue;
        ++ran;
        auto start = std::chrono::steady_clock::now();
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_time = secs <= c.limit_s;
        bool pass = r.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.name.c_str(), r.detail.c_str(), secs,
                    c.limit_s, in_time ? "" : ", over time");
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion named %s\n", only.c_str());
        return 2;
    }
    return failures;
}
