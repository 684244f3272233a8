#include "canto/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "canto/unicode.hpp"

namespace canto {

namespace {

using SymbolPair = std::pair<std::string, std::string>;

// Character sequence with the end marker attached to the final character.
std::vector<std::string> initial_symbols(const std::string& word,
                                         const std::string& end_marker) {
  auto decoded = uni::decode_utf8(word);
  if (!decoded || decoded->empty())
    throw std::invalid_argument("bpe: empty or invalid word");
  std::vector<std::string> symbols;
  symbols.reserve(decoded->size());
  for (char32_t cp : *decoded) symbols.push_back(uni::encode_utf8(cp));
  symbols.back() += end_marker;
  return symbols;
}

struct WordEntry {
  std::vector<std::string> symbols;
  std::uint64_t freq;
};

// Pair statistics maintained incrementally across merges.
struct PairStats {
  std::map<SymbolPair, std::uint64_t> counts;
  std::map<SymbolPair, std::vector<std::size_t>> where;  // word indices

  void add_word(const WordEntry& w, std::size_t idx) {
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
      SymbolPair p{w.symbols[i], w.symbols[i + 1]};
      counts[p] += w.freq;
      auto& locs = where[p];
      if (locs.empty() || locs.back() != idx) locs.push_back(idx);
    }
  }

  void remove_word(const WordEntry& w) {
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
      SymbolPair p{w.symbols[i], w.symbols[i + 1]};
      auto it = counts.find(p);
      it->second -= w.freq;
      if (it->second == 0) {
        counts.erase(it);
        where.erase(p);
      }
    }
  }
};

// One left-to-right pass replacing non-overlapping occurrences of the pair.
std::vector<std::string> merge_in_word(const std::vector<std::string>& symbols,
                                       const SymbolPair& pair) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first &&
        symbols[i + 1] == pair.second) {
      out.push_back(pair.first + pair.second);
      i += 2;
    } else {
      out.push_back(symbols[i]);
      ++i;
    }
  }
  return out;
}

MergeTable learn_single(const std::vector<const WordCounts*>& corpora,
                        std::size_t num_merges, BpeMode mode,
                        const std::string& end_marker) {
  std::vector<WordEntry> words;
  {
    // Joint mode sums frequencies of identical words across corpora.
    std::map<std::string, std::uint64_t> merged;
    for (const WordCounts* wc : corpora)
      for (const auto& [w, f] : *wc) merged[w] += f;
    words.reserve(merged.size());
    for (const auto& [w, f] : merged)
      words.push_back({initial_symbols(w, end_marker), f});
  }

  PairStats stats;
  for (std::size_t i = 0; i < words.size(); ++i) stats.add_word(words[i], i);

  MergeTable table;
  table.mode = mode;
  table.end_marker = end_marker;
  std::set<SymbolPair> seen;
  while (table.merges.size() < num_merges) {
    if (stats.counts.empty()) break;
    // Most frequent pair; ties break by lexicographic pair order. The map is
    // ordered by pair, so the first maximum seen is the lexicographic winner.
    const SymbolPair* best = nullptr;
    std::uint64_t best_count = 0;
    for (const auto& [pair, count] : stats.counts) {
      if (count > best_count) {
        best_count = count;
        best = &pair;
      }
    }
    SymbolPair chosen = *best;
    // A pair merged earlier can resurface when a later merge recreates its
    // left symbol; the existing table entry already covers it on apply.
    if (seen.insert(chosen).second) table.merges.push_back(chosen);

    std::vector<std::size_t> affected = stats.where[chosen];
    for (std::size_t idx : affected) {
      WordEntry& w = words[idx];
      stats.remove_word(w);
      w.symbols = merge_in_word(w.symbols, chosen);
      stats.add_word(w, idx);
    }
  }
  return table;
}

}  // namespace

WordCounts count_words(const std::vector<std::vector<std::string>>& sentences) {
  WordCounts counts;
  for (const auto& sent : sentences)
    for (const auto& tok : sent) ++counts[tok];
  return counts;
}

std::vector<MergeTable> learn_bpe(const std::vector<WordCounts>& corpora,
                                  std::size_t num_merges, BpeMode mode) {
  if (corpora.empty()) throw std::invalid_argument("learn_bpe: no corpora");
  const std::string end_marker(kSubwordEndMarker);
  std::vector<MergeTable> out;
  if (mode == BpeMode::Joint) {
    std::vector<const WordCounts*> all;
    for (const auto& c : corpora) all.push_back(&c);
    out.push_back(learn_single(all, num_merges, mode, end_marker));
  } else {
    for (const auto& c : corpora)
      out.push_back(learn_single({&c}, num_merges, mode, end_marker));
  }
  return out;
}

void MergeTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("bpe: cannot write " + path.string());
  out << "#canto-bpe v1 mode="
      << (mode == BpeMode::Joint ? "joint" : "separate") << "\n";
  for (const auto& [l, r] : merges) out << l << " " << r << "\n";
}

MergeTable MergeTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("bpe: cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("#canto-bpe", 0) != 0)
    throw std::runtime_error("bpe: missing version header in " + path.string());
  MergeTable table;
  table.mode = line.find("mode=separate") != std::string::npos
                   ? BpeMode::Separate
                   : BpeMode::Joint;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 == line.size())
      throw std::runtime_error("bpe: malformed merge line in " + path.string());
    table.merges.push_back({line.substr(0, space), line.substr(space + 1)});
  }
  return table;
}

BpeApplier::BpeApplier(MergeTable table) : table_(std::move(table)) {
  for (std::size_t i = 0; i < table_.merges.size(); ++i)
    rank_.emplace(table_.merges[i], i);
}

std::vector<std::string> BpeApplier::split_word(const std::string& word) const {
  auto cached = cache_.find(word);
  if (cached != cache_.end()) return cached->second;

  std::vector<std::string> symbols = initial_symbols(word, table_.end_marker);
  // Repeatedly apply the best-ranked (earliest learned) pair present.
  while (symbols.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    SymbolPair best;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = rank_.find({symbols[i], symbols[i + 1]});
      if (it != rank_.end() && it->second < best_rank) {
        best_rank = it->second;
        best = it->first;
      }
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    symbols = merge_in_word(symbols, best);
  }
  cache_[word] = symbols;
  return symbols;
}

TokenizedSentence BpeApplier::apply(const TokenizedSentence& words) const {
  TokenizedSentence out;
  out.scheme = TokenScheme::Bpe;
  for (const auto& w : words.tokens) {
    auto subwords = split_word(w);
    out.tokens.insert(out.tokens.end(), subwords.begin(), subwords.end());
  }
  return out;
}

}  // namespace canto
