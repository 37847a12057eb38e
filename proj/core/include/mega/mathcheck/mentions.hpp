#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mega/mathcheck/answer.hpp"

namespace mega::mathcheck {

struct Span {
    std::size_t begin;
    std::size_t end;
};

// Byte ranges of `text` that render a value of `answer`: standalone numbers,
// signed numbers in unary position, fractions, surds, "a +/- surd" sums and
// decimal approximations with at least two places. Labels match as whole
// words, case-insensitively. Spans are sorted and disjoint.
std::vector<Span> find_answer_mentions(std::string_view text, const AnswerForm& answer);

// Replaces every mention with `mask`.
std::string mask_mentions(std::string_view text, const AnswerForm& answer, std::string_view mask);

}  // namespace mega::mathcheck
