// Core text types shared across the pipeline.
#pragma once

#include <string>
#include <string_view>

namespace canto {

enum class LanguageLabel { Cantonese, Mandarin, Ambiguous, Foreign };

std::string_view to_string(LanguageLabel label);

struct RawDocument {
  std::string source_id;
  std::string text;  // valid UTF-8, may contain newlines
};

struct Sentence {
  std::string text;  // valid UTF-8, single line
  std::string source_id;
  LanguageLabel label = LanguageLabel::Ambiguous;
};

}  // namespace canto
