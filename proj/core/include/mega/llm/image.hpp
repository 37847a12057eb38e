#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mega::llm {

inline constexpr std::size_t kMaxImageBytes = 10 * 1024 * 1024;

// RFC 4648 base64 with padding.
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::string base64_encode(std::string_view bytes);
// Strict: rejects characters outside the alphabet, bad padding and lengths
// that are not a multiple of four. Throws std::invalid_argument.
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct ImagePayload {
    std::vector<std::uint8_t> bytes;
    std::string mime;     // image/png or image/jpeg
    std::string encoded;  // base64 of bytes

    bool operator==(const ImagePayload&) const = default;
};

bool supported_mime(std::string_view mime);

// Errors: EmptyImage, UnsupportedMime, OversizeImage.
ImagePayload encode_image(std::vector<std::uint8_t> bytes, std::string_view mime);

// Inverse of encode_image for client-supplied base64. Errors as encode_image,
// plus UndecodableImage for invalid base64 or bytes that are not a PNG/JPEG.
ImagePayload decode_image(std::string_view encoded, std::string_view mime);

}  // namespace mega::llm
