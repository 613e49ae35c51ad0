#pragma once

// Internal byte-level text helpers shared by the parsing modules. UTF-8 is
// handled just enough for the CJK sentence terminators and the two Unicode
// code points whose simple case folding lands in ASCII.

#include <cstdint>
#include <string>
#include <string_view>

namespace pivotal::detail {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

inline bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + ('a' - 'A')) : c;
}

struct CodePoint {
    std::uint32_t value = 0;
    std::size_t length = 1;  // bytes consumed; 1 for malformed sequences
};

/// Decodes the code point starting at text[pos]. Malformed bytes decode as
/// themselves with length 1, keeping offsets well defined on any input.
CodePoint decode_utf8(std::string_view text, std::size_t pos);

// Sentence-final punctuation: ASCII plus the fullwidth/CJK forms.
inline constexpr std::uint32_t kIdeographicFullStop = 0x3002;  // 。
inline constexpr std::uint32_t kFullwidthQuestion = 0xFF1F;    // ？
inline constexpr std::uint32_t kFullwidthExclamation = 0xFF01; // ！

inline bool is_terminator_cp(std::uint32_t cp) {
    return cp == '.' || cp == '?' || cp == '!' || cp == kIdeographicFullStop ||
           cp == kFullwidthQuestion || cp == kFullwidthExclamation;
}

/// Case folds and collapses whitespace runs to single spaces. Folding is
/// ASCII plus U+212A (kelvin sign) and U+017F (long s), the only code points
/// whose simple fold is an ASCII letter.
std::string fold_and_collapse(std::string_view text);

/// Collapses whitespace runs to single spaces and trims; case preserved.
std::string normalize_whitespace(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace pivotal::detail
