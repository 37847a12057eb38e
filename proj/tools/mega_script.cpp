#include <CLI11.hpp>

#include <iostream>

#include "mega/eval/eval.hpp"

// Writes scripted-backend files.
//   mega-script ratios --targets reported --trials 100 --out script.jsonl
int main(int argc, char** argv) {
    using namespace mega;
    CLI::App app{"Scripted backend files"};
    app.require_subcommand(1);

    std::string dataset, targets = "reported", input_types = "image,text", out;
    int trials = 1;
    std::uint64_t seed = 0;
    auto* ratios = app.add_subcommand("ratios", "Replies that pass a target share of each category and input type");
    ratios->add_option("--dataset", dataset, "Line-delimited golden set (default: bundled set)");
    ratios->add_option("--targets", targets, "reported, or category:type=percent,...");
    ratios->add_option("--input-types", input_types);
    ratios->add_option("--trials", trials)->check(CLI::PositiveNumber);
    ratios->add_option("--seed", seed);
    ratios->add_option("--out", out)->required();
    CLI11_PARSE(app, argc, argv);

    try {
        eval::CellTargets cells;
        if (targets == "reported") {
            for (const auto& [c, v] : eval::reference_targets()) {
                cells[{c, eval::InputType::Image}] = v.first;
                cells[{c, eval::InputType::Text}] = v.second;
            }
        } else {
            cells = eval::parse_targets(targets);
        }
        std::vector<eval::InputType> types;
        std::stringstream in(input_types);
        for (std::string t; std::getline(in, t, ',');) {
            auto parsed = eval::input_type_from_name(t);
            if (!parsed) throw std::invalid_argument("unknown input type " + t);
            types.push_back(*parsed);
        }
        auto problems = dataset.empty() ? bank::bundled_golden_set() : bank::load_golden_set(dataset);
        auto records = eval::ratio_script(problems, types, trials, cells, seed);
        llm::save_script(out, records);
        std::cerr << records.size() << " records written to " << out << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "mega-script: " << e.what() << '\n';
        return 2;
    }
}
