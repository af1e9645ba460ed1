#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gbert::utf8 {

/// Splits UTF-8 text into one string per code point. Throws DataError on
/// malformed sequences (bad lead byte, truncated or overlong encodings,
/// surrogates) naming the byte offset.
std::vector<std::string> split_chars(std::string_view text);

bool is_single_char(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep = "");

}  // namespace gbert::utf8
