/**
 * @file utf8.h
 * @brief Minimal UTF-8 helpers used by the text-facing modules.
 */

#ifndef M2L_UTF8_H
#define M2L_UTF8_H

#include <string>
#include <string_view>

namespace m2l::utf8 {

/// Decodes UTF-8. Invalid sequences decode to U+FFFD.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

/// True for CJK Unified Ideograph codepoints (the base block and
/// extensions A through I). Compatibility ideographs are excluded.
bool is_cjk_ideograph(char32_t cp);

/// Keeps only CJK ideographs.
std::u32string cjk_only(std::u32string_view text);

}  // namespace m2l::utf8

#endif  // M2L_UTF8_H
