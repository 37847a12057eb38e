#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>
#include <pthread.h>
#include <thread>

#include "mega/api/service.hpp"
#include "mega/api/store.hpp"
#include "mega/tutor/engine.hpp"

// HTTP tutoring service configured from the environment (see
// mega::api::config_from_env). Prints "listening on <port>" once bound.
int main() {
    using namespace mega;
    api::ServiceConfig config;
    try {
        config = api::config_from_env();
    } catch (const std::exception& e) {
        std::cerr << "mega-server: " << e.what() << '\n';
        return 2;
    }

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        auto backend = llm::make_backend(config.backend);
        tutor::TutorConfig tutor_config;
        tutor_config.ttl_seconds = config.session_ttl_seconds;
        tutor_config.allow_model_judge = config.allow_model_judge;
        tutor::SystemClock clock;
        tutor::TutorEngine engine(*backend, tutor_config, clock);

        std::filesystem::create_directories(config.data_dir);
        api::FileSessionStore store(config.data_dir);
        if (config.crash_after_events > 0) store.crash_after_events(config.crash_after_events);

        api::ServiceOptions options;
        options.rate_limit_per_minute = config.rate_limit_per_minute;
        options.id_seed = config.id_seed;
        options.idempotency_file = config.data_dir / "idempotency.jsonl";
        api::TutorService service(engine, store, options);

        api::HttpServer server(service);
        int port = server.bind(config.host, config.port);
        std::cout << "listening on " << port << std::endl;
        spdlog::info("backend={} data_dir={} port={}", llm::backend_kind_id(config.backend.kind), config.data_dir.string(), port);

        std::thread waiter([&] {
            int sig = 0;
            sigwait(&signals, &sig);
            spdlog::info("signal {}, shutting down", sig);
            server.stop();
        });
        server.listen();
        pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "mega-server: " << e.what() << '\n';
        return 1;
    }
}
