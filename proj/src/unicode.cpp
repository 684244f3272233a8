#include "canto/unicode.hpp"

#include <algorithm>
#include <array>
#include <iterator>

namespace canto::uni {

namespace {

// Continuation byte: 10xxxxxx
inline bool is_cont(unsigned char b) { return (b & 0xC0) == 0x80; }

}  // namespace

std::optional<std::u32string> decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      return std::nullopt;
    }
    if (i + len > n) return std::nullopt;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char b = static_cast<unsigned char>(s[i + k]);
      if (!is_cont(b)) return std::nullopt;
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings, surrogates, and out-of-range values.
    static constexpr char32_t kMinForLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMinForLen[len]) return std::nullopt;
    if (cp >= 0xD800 && cp <= 0xDFFF) return std::nullopt;
    if (cp > 0x10FFFF) return std::nullopt;
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool is_valid_utf8(std::string_view s) { return decode_utf8(s).has_value(); }

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(const std::u32string& cps) {
  std::string out;
  out.reserve(cps.size() * 3);
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  append_utf8(out, cp);
  return out;
}

bool is_cjk_ideograph(char32_t cp) {
  // CJK Unified Ideographs and extensions A..G.
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0x2A700 && cp <= 0x2EBEF) ||
         (cp >= 0x30000 && cp <= 0x3134F);
}

bool is_emoji(char32_t cp) {
  struct Range {
    char32_t lo, hi;
  };
  // Sorted block table; membership decides, no per-character list.
  static constexpr std::array<Range, 16> kBlocks = {{
      {0x200D, 0x200D},    // zero width joiner (emoji sequences)
      {0x20E3, 0x20E3},    // combining enclosing keycap
      {0x2600, 0x26FF},    // Miscellaneous Symbols
      {0x2700, 0x27BF},    // Dingbats
      {0x2B00, 0x2BFF},    // Miscellaneous Symbols and Arrows
      {0xFE0E, 0xFE0F},    // variation selectors 15/16
      {0x1F000, 0x1F0FF},  // Mahjong / Domino / Playing Cards
      {0x1F1E6, 0x1F1FF},  // regional indicator symbols
      {0x1F200, 0x1F2FF},  // Enclosed Ideographic Supplement
      {0x1F300, 0x1F5FF},  // Misc Symbols and Pictographs
      {0x1F600, 0x1F64F},  // Emoticons
      {0x1F680, 0x1F6FF},  // Transport and Map Symbols
      {0x1F780, 0x1F7FF},  // Geometric Shapes Extended
      {0x1F900, 0x1F9FF},  // Supplemental Symbols and Pictographs
      {0x1FA00, 0x1FA6F},  // Chess Symbols
      {0x1FA70, 0x1FAFF},  // Symbols and Pictographs Extended-A
  }};
  auto it = std::lower_bound(
      kBlocks.begin(), kBlocks.end(), cp,
      [](const Range& r, char32_t c) { return r.hi < c; });
  return it != kBlocks.end() && cp >= it->lo;
}

bool is_ascii_letter(char32_t cp) {
  return (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z');
}

bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v' || cp == 0x3000;
}

bool is_cut_punct(char32_t cp) {
  return cp == 0x3002 /* 。 */ || cp == 0xFF0E /* ． */ || cp == '.' ||
         cp == '!' || cp == 0xFF01 /* ！ */ || cp == '?' ||
         cp == 0xFF1F /* ？ */;
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace canto::uni
