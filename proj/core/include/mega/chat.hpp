#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mega/llm/image.hpp"

namespace mega {

enum class Role { System, Assistant, Student };

std::string_view role_name(Role r) noexcept;  // "system", "assistant", "student"
std::optional<Role> role_from_name(std::string_view name) noexcept;

struct ChatMessage {
    Role role = Role::Student;
    std::string text;
    // Student messages only.
    std::optional<llm::ImagePayload> attachment;

    bool operator==(const ChatMessage&) const = default;
};

}  // namespace mega
