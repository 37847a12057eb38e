#pragma once

#include <filesystem>
#include <string_view>

namespace mega {

// Locates bundled files. MEGA_RESOURCE_DIR / MEGA_DATA_DIR override the
// defaults; otherwise the source tree is preferred when present, then the
// install prefix.
std::filesystem::path resource_path(std::string_view relative);
std::filesystem::path data_path(std::string_view relative);

}  // namespace mega
