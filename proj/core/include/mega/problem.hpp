#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mega/mathcheck/answer.hpp"
#include "mega/mathcheck/rational.hpp"

namespace mega {

enum class Category {
    LinearEquation,
    QuadraticEquation,
    CoordinateGeometry,
    Factorial,
    TriangleByAngles,
    Trigonometry,
    Unknown,
};

inline constexpr Category kCheckableCategories[] = {
    Category::LinearEquation, Category::QuadraticEquation, Category::CoordinateGeometry,
    Category::Factorial,      Category::TriangleByAngles,  Category::Trigonometry,
};

// Stable machine id: "linear_equation", ..., "unknown".
std::string_view category_id(Category c) noexcept;
// Table heading: "Linear Equation", "Quadratic Equations", ...
std::string_view category_title(Category c) noexcept;
std::optional<Category> category_from_id(std::string_view id) noexcept;

enum class ProblemSource { UserText, UserImage, Generated };

std::string_view source_id(ProblemSource s) noexcept;
std::optional<ProblemSource> source_from_id(std::string_view id) noexcept;

struct Problem {
    std::string statement;
    Category category = Category::Unknown;
    // Template parameters for generated problems.
    std::map<std::string, mathcheck::Rational> params;
    std::optional<mathcheck::AnswerForm> reference;
    ProblemSource source = ProblemSource::UserText;
};

}  // namespace mega
