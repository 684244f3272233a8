#include "canto/bleu.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "canto/segmentation.hpp"
#include "canto/unicode.hpp"

namespace canto {

namespace {

bool is_punct_cp(char32_t cp) {
  if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
      (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E))
    return true;
  return (cp >= 0x2000 && cp <= 0x206F) ||  // general punctuation
         (cp >= 0x3000 && cp <= 0x303F) ||  // CJK symbols and punctuation
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

bool is_punct_token(const std::string& tok) {
  auto cps = uni::decode_utf8(tok);
  return cps && cps->size() == 1 && is_punct_cp((*cps)[0]);
}

std::vector<std::string> bleu_tokens(const Sentence& s, bool strip_punct) {
  std::vector<std::string> toks = char_tokenize(s).tokens;
  if (!strip_punct) return toks;
  std::vector<std::string> kept;
  kept.reserve(toks.size());
  for (auto& t : toks)
    if (!is_punct_token(t)) kept.push_back(std::move(t));
  return kept;
}

void count_ngrams(const std::vector<std::string>& toks, int n,
                  std::unordered_map<std::string, std::uint64_t>& counts) {
  if (static_cast<int>(toks.size()) < n) return;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += toks[i + k];
    }
    ++counts[key];
  }
}

}  // namespace

std::string BleuReport::report() const {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", bleu);
  os << "bleu\t" << buf << "\n";
  for (int n = 0; n < 4; ++n) {
    std::snprintf(buf, sizeof(buf), "%.6f", precisions[n]);
    os << "p" << (n + 1) << "\t" << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.6f", brevity_penalty);
  os << "brevity_penalty\t" << buf << "\n"
     << "hypothesis_length\t" << hypothesis_length << "\n"
     << "reference_length\t" << reference_length << "\n";
  return os.str();
}

BleuReport char_bleu(const std::vector<Sentence>& hypotheses,
                     const std::vector<Sentence>& references, bool strip_punct) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("char_bleu: length mismatch");
  if (hypotheses.empty())
    throw std::invalid_argument("char_bleu: empty corpus");

  std::array<std::uint64_t, 4> correct{}, total{};
  std::uint64_t hyp_len = 0, ref_len = 0;

  std::unordered_map<std::string, std::uint64_t> hyp_counts, ref_counts;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    std::vector<std::string> hyp = bleu_tokens(hypotheses[i], strip_punct);
    std::vector<std::string> ref = bleu_tokens(references[i], strip_punct);
    if (ref.empty())
      throw std::invalid_argument("char_bleu: empty reference sentence at line " +
                                  std::to_string(i + 1));
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int n = 1; n <= 4; ++n) {
      hyp_counts.clear();
      ref_counts.clear();
      count_ngrams(hyp, n, hyp_counts);
      count_ngrams(ref, n, ref_counts);
      for (const auto& [key, c] : hyp_counts) {
        total[n - 1] += c;
        auto it = ref_counts.find(key);
        if (it != ref_counts.end()) correct[n - 1] += std::min(c, it->second);
      }
    }
  }

  BleuReport out;
  out.hypothesis_length = hyp_len;
  out.reference_length = ref_len;

  if (hyp_len == 0) return out;  // nothing generated: BLEU 0
  out.brevity_penalty =
      hyp_len < ref_len
          ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
          : 1.0;

  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    double c = static_cast<double>(correct[n]);
    double t = static_cast<double>(total[n]);
    if (n == 0) {
      out.precisions[n] = t > 0 ? c / t : 0.0;
    } else if (correct[n] == 0) {
      // Add-1 smoothing only where a higher-order precision would be zero.
      out.precisions[n] = (c + 1.0) / (t + 1.0);
    } else {
      out.precisions[n] = c / t;
    }
    if (out.precisions[n] <= 0.0) return out;  // unigram miss: BLEU stays 0
    log_sum += 0.25 * std::log(out.precisions[n]);
  }
  out.bleu = 100.0 * out.brevity_penalty * std::exp(log_sum);
  return out;
}

void ConversionTable::insert(char32_t from, char32_t to) {
  auto [it, fresh] = map_.emplace(from, to);
  if (!fresh && it->second != to)
    throw std::runtime_error("conversion table: duplicate source character");
}

char32_t ConversionTable::convert(char32_t cp) const {
  auto it = map_.find(cp);
  return it == map_.end() ? cp : it->second;
}

ConversionTable ConversionTable::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  ConversionTable table;
  for (const auto& [from, to] : pairs) {
    auto f = uni::decode_utf8(from);
    auto t = uni::decode_utf8(to);
    if (!f || !t || f->size() != 1 || t->size() != 1)
      throw std::runtime_error("conversion table: entries must be single characters");
    table.insert((*f)[0], (*t)[0]);
  }
  // One-to-one and idempotent: targets are unique, and a target never maps
  // onward to a different character.
  std::unordered_map<char32_t, char32_t> seen_targets;
  for (const auto& [from, to] : table.map_) {
    auto [it, fresh] = seen_targets.emplace(to, from);
    if (!fresh)
      throw std::runtime_error("conversion table: duplicate target character");
    auto onward = table.map_.find(to);
    if (onward != table.map_.end() && onward->second != to)
      throw std::runtime_error("conversion table: not idempotent");
  }
  return table;
}

ConversionTable ConversionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("conversion table: cannot read " + path.string());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("conversion table: malformed line: " + line);
    pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return from_pairs(pairs);
}

Sentence convert_charset(const Sentence& s, const ConversionTable& table) {
  auto cps = uni::decode_utf8(s.text);
  if (!cps) throw std::invalid_argument("convert_charset: invalid UTF-8");
  std::u32string out;
  out.reserve(cps->size());
  for (char32_t cp : *cps) out.push_back(table.convert(cp));
  return {uni::encode_utf8(out), s.source_id, s.label};
}

BleuReport baseline_evaluate(const std::vector<Sentence>& test_src,
                             const std::vector<Sentence>& test_ref,
                             const ConversionTable& table) {
  if (test_src.size() != test_ref.size())
    throw std::invalid_argument("baseline_evaluate: misaligned files");
  std::vector<Sentence> hyp, ref;
  hyp.reserve(test_src.size());
  ref.reserve(test_ref.size());
  for (const auto& s : test_src) hyp.push_back(convert_charset(s, table));
  for (const auto& s : test_ref) ref.push_back(convert_charset(s, table));
  return char_bleu(hyp, ref);
}

}  // namespace canto
