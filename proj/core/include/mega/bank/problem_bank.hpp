#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mega/problem.hpp"

namespace mega::bank {

enum class Difficulty { Simpler, Matched };

struct ParamRange {
    int lo = -9;
    int hi = 9;
};

struct GenerationSpec {
    std::uint64_t seed = 0;
    Difficulty difficulty = Difficulty::Simpler;
    // Integer parameter range for Matched problems; Simpler narrows it.
    ParamRange range;
};

// Ordered rule table, first match wins. Total: Unknown is the fallback.
Category classify(std::string_view statement);

// A similar but not identical problem of the same category and template
// family, with a reference attached. Never states the original's answer and
// never has an equivalent answer. Throws Error(UnsupportedCategory) for
// Unknown and Error(UnsupportedPattern) when the original cannot be read.
Problem generate_analog(const Problem& original, const GenerationSpec& spec);

// As generate_analog at Matched difficulty, and distinct from the analog
// produced by the same spec.
Problem generate_challenge(const Problem& original, const GenerationSpec& spec);

// Template family name of a problem, e.g. "linear", "factorial_ratio",
// "coordinate_slope". Problems of the same family share statement templates.
std::string template_family(const Problem& problem);

struct GoldenProblem {
    std::string id;
    Problem problem;  // source UserText, reference attached
    std::filesystem::path image_path;  // absolute
};

// Reads a line-delimited golden set. Relative image paths resolve against the
// file's directory. Throws Error(DatasetParseError) naming the line.
std::vector<GoldenProblem> load_golden_set(const std::filesystem::path& file);

// The bundled 70-problem evaluation set.
const std::vector<GoldenProblem>& bundled_golden_set();

// Bundled problems of one category; empty for Unknown.
std::vector<Problem> golden_set(Category category);

}  // namespace mega::bank
