#include "mega/llm/image.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "mega/error.hpp"

namespace mega::llm {
namespace {

bool in_alphabet(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '+' || c == '/';
}

std::string encode_raw(const unsigned char* data, std::size_t size) {
    std::string out(4 * ((size + 2) / 3), '\0');
    if (size == 0) return out;
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data, static_cast<int>(size));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

bool looks_like(const std::vector<std::uint8_t>& b, std::string_view mime) {
    if (mime == "image/png")
        return b.size() >= 8 && b[0] == 0x89 && b[1] == 'P' && b[2] == 'N' && b[3] == 'G' && b[4] == 0x0D &&
               b[5] == 0x0A && b[6] == 0x1A && b[7] == 0x0A;
    return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) { return encode_raw(bytes.data(), bytes.size()); }

std::string base64_encode(std::string_view bytes) {
    return encode_raw(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of four");
    std::size_t pad = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '=') {
            if (i + 2 < text.size()) throw std::invalid_argument("misplaced base64 padding");
            ++pad;
            continue;
        }
        if (pad > 0 || !in_alphabet(c)) throw std::invalid_argument("invalid base64 character");
    }
    std::vector<std::uint8_t> out(text.size() / 4 * 3);
    if (text.empty()) return out;
    int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw std::invalid_argument("invalid base64");
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

bool supported_mime(std::string_view mime) { return mime == "image/png" || mime == "image/jpeg"; }

ImagePayload encode_image(std::vector<std::uint8_t> bytes, std::string_view mime) {
    if (bytes.empty()) throw Error(Errc::EmptyImage, "image is empty");
    if (!supported_mime(mime)) throw Error(Errc::UnsupportedMime, "unsupported image type: " + std::string(mime));
    if (bytes.size() > kMaxImageBytes) throw Error(Errc::OversizeImage, "image exceeds 10 MiB");
    ImagePayload p;
    p.encoded = base64_encode(bytes);
    p.bytes = std::move(bytes);
    p.mime = std::string(mime);
    return p;
}

ImagePayload decode_image(std::string_view encoded, std::string_view mime) {
    if (!supported_mime(mime)) throw Error(Errc::UnsupportedMime, "unsupported image type: " + std::string(mime));
    if (encoded.size() / 4 * 3 > kMaxImageBytes + 3) throw Error(Errc::OversizeImage, "image exceeds 10 MiB");
    std::vector<std::uint8_t> bytes;
    try {
        bytes = base64_decode(encoded);
    } catch (const std::invalid_argument& e) {
        throw Error(Errc::UndecodableImage, e.what());
    }
    if (bytes.empty()) throw Error(Errc::EmptyImage, "image is empty");
    if (!looks_like(bytes, mime)) throw Error(Errc::UndecodableImage, "bytes are not a " + std::string(mime) + " image");
    return encode_image(std::move(bytes), mime);
}

}  // namespace mega::llm
