#include "docforge/unicode.hpp"

#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include <vector>

namespace docforge {

std::u32string decode_utf8_lossy(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };

    while (i < s.size()) {
        const unsigned char b0 = byte(i);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        }

        bool ok = len > 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const unsigned char bk = byte(i + k);
            if ((bk & 0xC0) != 0x80) {
                ok = false;
            } else {
                cp = (cp << 6) | (bk & 0x3F);
            }
        }
        if (ok) {
            // Reject overlong encodings, surrogates, and out-of-range values.
            static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
            if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
                ok = false;
            }
        }

        if (ok) {
            out.push_back(cp);
            i += len;
        } else {
            out.push_back(0xDC00 + b0);
            i += 1;
        }
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp >= 0xDC00 && cp <= 0xDCFF) {
        out += static_cast<char>(cp - 0xDC00);
    } else if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string to_nfc(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const UNormalizer2* nfc = unorm2_getNFCInstance(&status);
    if (U_FAILURE(status)) return std::string(s);

    // UTF-8 -> UTF-16
    std::vector<UChar> u16(s.size() + 1);
    int32_t u16_len = 0;
    status = U_ZERO_ERROR;
    u_strFromUTF8(u16.data(), static_cast<int32_t>(u16.size()), &u16_len, s.data(),
                  static_cast<int32_t>(s.size()), &status);
    if (U_FAILURE(status)) return std::string(s);

    std::vector<UChar> norm(static_cast<std::size_t>(u16_len) * 2 + 16);
    status = U_ZERO_ERROR;
    int32_t norm_len = unorm2_normalize(nfc, u16.data(), u16_len, norm.data(),
                                        static_cast<int32_t>(norm.size()), &status);
    if (status == U_BUFFER_OVERFLOW_ERROR) {
        norm.resize(static_cast<std::size_t>(norm_len) + 1);
        status = U_ZERO_ERROR;
        norm_len = unorm2_normalize(nfc, u16.data(), u16_len, norm.data(),
                                    static_cast<int32_t>(norm.size()), &status);
    }
    if (U_FAILURE(status)) return std::string(s);

    // UTF-16 -> UTF-8
    std::string out(static_cast<std::size_t>(norm_len) * 4 + 4, '\0');
    int32_t out_len = 0;
    status = U_ZERO_ERROR;
    u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &out_len, norm.data(),
                norm_len, &status);
    if (U_FAILURE(status)) return std::string(s);
    out.resize(static_cast<std::size_t>(out_len));
    return out;
}

}  // namespace docforge
