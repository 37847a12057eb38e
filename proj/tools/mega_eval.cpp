#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mega/error.hpp"
#include "mega/eval/eval.hpp"

// Runs a labeled problem set through the tutoring pipeline and prints
// per-category success percentages. Exit 0 on a completed run, 3 when
// backend errors left the report partial, 2 on bad input.
int main(int argc, char** argv) {
    using namespace mega;
    CLI::App app{"Category and input-type evaluation"};

    eval::EvalConfig config;
    std::string dataset, backend = "scripted", input_types = "image,text", format = "table", criterion = "pipeline-complete";
    std::string out_path, script, model, endpoint, key_env;
    app.add_option("--dataset", dataset, "Line-delimited golden set (default: bundled set)");
    app.add_option("--backend", backend)->check(CLI::IsMember({"scripted", "remote"}));
    app.add_option("--script", script, "Script file for the scripted backend");
    app.add_option("--model", model, "Model name for the remote backend");
    app.add_option("--endpoint", endpoint, "Chat completions URL for the remote backend");
    app.add_option("--api-key-env", key_env, "Environment variable holding the API key");
    app.add_option("--input-types", input_types, "Comma-separated subset of image,text");
    app.add_option("--format", format)->check(CLI::IsMember({"table", "csv"}));
    app.add_option("--criterion", criterion)->check(CLI::IsMember({"pipeline-complete", "category-only"}));
    app.add_option("--trials", config.trials, "Runs per problem and input type")->check(CLI::PositiveNumber);
    app.add_option("--seed", config.seed);
    app.add_option("--parallel", config.parallel)->check(CLI::PositiveNumber);
    app.add_option("--out", out_path, "Write the report here instead of stdout");
    CLI11_PARSE(app, argc, argv);

    try {
        config.input_types.clear();
        std::stringstream types(input_types);
        for (std::string t; std::getline(types, t, ',');) {
            auto parsed = eval::input_type_from_name(t);
            if (!parsed) throw std::invalid_argument("unknown input type " + t);
            config.input_types.push_back(*parsed);
        }
        config.success_criterion = *eval::criterion_from_id(criterion);
        config.backend.kind = backend == "remote" ? llm::BackendKind::Remote : llm::BackendKind::Scripted;
        config.backend.script_path = script;
        if (!model.empty()) config.backend.model_name = model;
        if (!endpoint.empty()) config.backend.endpoint_url = endpoint;
        if (!key_env.empty()) config.backend.api_key_ref = key_env;
        llm::validate(config.backend);
        eval::validate(config);

        auto backend_impl = llm::make_backend(config.backend);
        auto problems = dataset.empty() ? bank::bundled_golden_set() : bank::load_golden_set(dataset);
        auto report = eval::run_eval(config, problems, *backend_impl);
        std::string text = eval::render_report(report, format == "csv" ? eval::ReportFormat::Csv : eval::ReportFormat::Table);
        if (out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            out << text;
            if (!out) throw std::runtime_error("cannot write " + out_path);
        }
        return report.partial() ? 3 : 0;
    } catch (const std::exception& e) {
        std::cerr << "mega-eval: " << e.what() << '\n';
        return 2;
    }
}
