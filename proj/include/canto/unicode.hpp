// UTF-8 decoding and codepoint classification for the CJK text pipeline.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace canto::uni {

// Decodes a UTF-8 string into codepoints. Returns std::nullopt on any
// invalid byte sequence (overlong forms, surrogates, truncation).
std::optional<std::u32string> decode_utf8(std::string_view s);

// Decodes, replacing invalid sequences is not supported by design: callers
// that tolerate bad input drop the whole line and count it.
bool is_valid_utf8(std::string_view s);

void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(const std::u32string& cps);
std::string encode_utf8(char32_t cp);

// CJK Unified Ideographs blocks (base, ext A, ext B..G).
bool is_cjk_ideograph(char32_t cp);

// Emoji classification by Unicode block membership, plus the invisible
// joiners that only occur inside emoji sequences (VS15/16, ZWJ, keycap).
bool is_emoji(char32_t cp);

bool is_ascii_letter(char32_t cp);
bool is_ascii_digit(char32_t cp);

// ASCII whitespace plus the ideographic space U+3000.
bool is_space(char32_t cp);

// Sentence-final cut punctuation: 。 ． . ! ！ ? ？
bool is_cut_punct(char32_t cp);

std::size_t codepoint_count(std::string_view s);

}  // namespace canto::uni
