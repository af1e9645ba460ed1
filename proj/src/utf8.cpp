#include "gbert/utf8.hpp"

#include "gbert/errors.hpp"

namespace gbert::utf8 {

namespace {

[[noreturn]] void bad(std::size_t offset, const char* what) {
    throw DataError("invalid UTF-8 at byte " + std::to_string(offset) + ": " + what);
}

}  // namespace

std::vector<std::string> split_chars(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (lead < 0x80) {
            len = 1;
            cp = lead;
        } else if ((lead & 0xE0) == 0xC0) {
            len = 2;
            cp = lead & 0x1F;
        } else if ((lead & 0xF0) == 0xE0) {
            len = 3;
            cp = lead & 0x0F;
        } else if ((lead & 0xF8) == 0xF0) {
            len = 4;
            cp = lead & 0x07;
        } else {
            bad(i, "invalid lead byte");
        }
        if (i + len > text.size()) {
            bad(i, "truncated sequence");
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto cont = static_cast<unsigned char>(text[i + k]);
            if ((cont & 0xC0) != 0x80) {
                bad(i + k, "expected continuation byte");
            }
            cp = (cp << 6) | (cont & 0x3F);
        }
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) {
            bad(i, "overlong encoding");
        }
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            bad(i, "code point out of range");
        }
        out.emplace_back(text.substr(i, len));
        i += len;
    }
    return out;
}

bool is_single_char(std::string_view text) {
    try {
        return split_chars(text).size() == 1;
    } catch (const DataError&) {
        return false;
    }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

}  // namespace gbert::utf8
