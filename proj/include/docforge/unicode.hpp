#pragma once

#include <string>
#include <string_view>

namespace docforge {

// Decodes UTF-8 into Unicode scalar values. Total on arbitrary bytes:
// each byte of an invalid sequence maps to U+DC00+byte so distinct inputs
// stay distinct.
std::u32string decode_utf8_lossy(std::string_view s);

// NFC normalization (ICU-backed). Byte sequences that are not valid UTF-8
// are returned unchanged.
std::string to_nfc(std::string_view s);

// Appends the UTF-8 encoding of one scalar value. Lossy-decoded invalid
// bytes (U+DC00..U+DCFF) are restored to their original single byte.
void append_utf8(std::string& out, char32_t cp);

}  // namespace docforge
