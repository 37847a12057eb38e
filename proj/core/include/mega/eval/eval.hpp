#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mega/bank/problem_bank.hpp"
#include "mega/llm/backend.hpp"

namespace mega::eval {

enum class InputType { Image, Text };

std::string_view input_type_name(InputType t) noexcept;  // "Image", "Text"
std::optional<InputType> input_type_from_name(std::string_view name) noexcept;  // case-insensitive

enum class SuccessCriterion {
    // Stated category matches the label, the challenge's oracle answer is
    // judged Correct and the reward's final answer matches the reference.
    PipelineComplete,
    // Stated category matches the label.
    CategoryOnly,
};

std::string_view criterion_id(SuccessCriterion c) noexcept;
std::optional<SuccessCriterion> criterion_from_id(std::string_view id) noexcept;

struct EvalConfig {
    std::filesystem::path dataset;
    llm::BackendConfig backend;
    std::vector<InputType> input_types{InputType::Image, InputType::Text};
    SuccessCriterion success_criterion = SuccessCriterion::PipelineComplete;
    int trials = 1;
    std::uint64_t seed = 0;
    int parallel = 1;
};

// Throws std::invalid_argument.
void validate(const EvalConfig& config);

struct Cell {
    int attempted = 0;
    int succeeded = 0;
    // Runs stopped by a backend error; counted as attempted and failed.
    int errors = 0;
    // Pre-reward assistant messages that mentioned the reference answer.
    int gate_violations = 0;

    int failed() const noexcept { return attempted - succeeded; }
    // 100·succeeded/attempted rounded to one decimal; empty when nothing ran.
    std::optional<double> percentage() const noexcept;
    bool operator==(const Cell&) const = default;
};

using CellKey = std::pair<Category, InputType>;

struct CategoryReport {
    std::map<CellKey, Cell> cells;

    Cell cell(Category c, InputType t) const;
    Cell totals() const;
    bool partial() const noexcept;
    bool operator==(const CategoryReport&) const = default;
};

// Loads the dataset and builds the backend from the config. Throws
// Error(DatasetParseError).
CategoryReport run_eval(const EvalConfig& config);

// Evaluates the given problems against a caller-supplied backend. Cells exist
// for every checkable category and every configured input type.
CategoryReport run_eval(const EvalConfig& config, const std::vector<bank::GoldenProblem>& problems,
                        llm::ChatBackend& backend);

enum class ReportFormat { Table, Csv };

std::string render_report(const CategoryReport& report, ReportFormat format);

// Inverse of render_report(_, Csv). Throws Error(DatasetParseError).
CategoryReport parse_csv(std::string_view text);

// Percentages reported for the original deployment, image then text.
const std::map<Category, std::pair<double, double>>& reference_targets();

// Target pass percentage per cell.
using CellTargets = std::map<CellKey, double>;

// Scripted replies that make each cell pass the target share of its runs
// (rounded to whole runs). Failing runs get an identification reply naming
// the wrong category. Which runs fail is chosen by the seed.
std::vector<llm::ScriptRecord> ratio_script(const std::vector<bank::GoldenProblem>& problems,
                                            const std::vector<InputType>& input_types, int trials,
                                            const CellTargets& targets, std::uint64_t seed);

// Parses "linear_equation:image=65,linear_equation:text=85,...". Throws
// std::invalid_argument.
CellTargets parse_targets(std::string_view text);

}  // namespace mega::eval
