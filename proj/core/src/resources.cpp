#include "mega/resources.hpp"

#include <cstdlib>

namespace mega {
namespace {

std::filesystem::path locate(const char* env, const char* build_dir, const char* install_dir, std::string_view relative) {
    if (const char* dir = std::getenv(env); dir != nullptr && *dir != '\0') return std::filesystem::path(dir) / relative;
    std::filesystem::path built = std::filesystem::path(build_dir) / relative;
    std::error_code ec;
    if (std::filesystem::exists(built, ec)) return built;
    return std::filesystem::path(install_dir) / relative;
}

}  // namespace

std::filesystem::path resource_path(std::string_view relative) {
    return locate("MEGA_RESOURCE_DIR", MEGA_BUILD_RESOURCE_DIR, MEGA_INSTALL_RESOURCE_DIR, relative);
}

std::filesystem::path data_path(std::string_view relative) {
    return locate("MEGA_DATA_DIR", MEGA_BUILD_DATA_DIR, MEGA_INSTALL_DATA_DIR, relative);
}

}  // namespace mega
