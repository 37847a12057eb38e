#include "mega/problem.hpp"
#include "mega/chat.hpp"

#include <array>

namespace mega {

namespace {

struct CategoryInfo {
    Category category;
    std::string_view id;
    std::string_view title;
};

constexpr std::array<CategoryInfo, 7> kCategories{{
    {Category::LinearEquation, "linear_equation", "Linear Equation"},
    {Category::QuadraticEquation, "quadratic_equation", "Quadratic Equations"},
    {Category::CoordinateGeometry, "coordinate_geometry", "Coordinate Geometry"},
    {Category::Factorial, "factorial", "Factorial"},
    {Category::TriangleByAngles, "triangle_by_angles", "Triangle Classification by Angles"},
    {Category::Trigonometry, "trigonometry", "Trigonometry"},
    {Category::Unknown, "unknown", "Unknown"},
}};

}  // namespace

std::string_view category_id(Category c) noexcept {
    for (const auto& info : kCategories)
        if (info.category == c) return info.id;
    return "unknown";
}

std::string_view category_title(Category c) noexcept {
    for (const auto& info : kCategories)
        if (info.category == c) return info.title;
    return "Unknown";
}

std::optional<Category> category_from_id(std::string_view id) noexcept {
    for (const auto& info : kCategories)
        if (info.id == id) return info.category;
    return std::nullopt;
}

std::string_view source_id(ProblemSource s) noexcept {
    switch (s) {
        case ProblemSource::UserText: return "user_text";
        case ProblemSource::UserImage: return "user_image";
        case ProblemSource::Generated: return "generated";
    }
    return "user_text";
}

std::optional<ProblemSource> source_from_id(std::string_view id) noexcept {
    if (id == "user_text") return ProblemSource::UserText;
    if (id == "user_image") return ProblemSource::UserImage;
    if (id == "generated") return ProblemSource::Generated;
    return std::nullopt;
}

}  // namespace mega

namespace mega {

std::string_view role_name(Role r) noexcept {
    switch (r) {
        case Role::System: return "system";
        case Role::Assistant: return "assistant";
        case Role::Student: return "student";
    }
    return "student";
}

std::optional<Role> role_from_name(std::string_view name) noexcept {
    if (name == "system") return Role::System;
    if (name == "assistant") return Role::Assistant;
    if (name == "student") return Role::Student;
    return std::nullopt;
}

}  // namespace mega
