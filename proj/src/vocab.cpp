#include "canto/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "canto/hash.hpp"

namespace canto {

Vocabulary::Vocabulary() {
  for (const char* t : {"<PAD>", "<UNK>", "<EOS>", "<BOS_L1>", "<BOS_L2>"}) {
    index_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
    freqs_.push_back(0);
  }
}

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& sentences,
    std::uint64_t min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& sent : sentences)
    for (const auto& tok : sent) ++counts[tok];

  std::vector<std::pair<std::string, std::uint64_t>> items(counts.begin(),
                                                           counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (const auto& [tok, freq] : items)
    if (freq >= min_count) v.add(tok, freq);
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocab id out of range");
  return tokens_[id];
}

std::uint64_t Vocabulary::frequency(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocab id out of range");
  return freqs_[id];
}

int Vocabulary::add(const std::string& token, std::uint64_t freq) {
  auto it = index_.find(token);
  if (it != index_.end()) {
    freqs_[it->second] += freq;
    return it->second;
  }
  int id = static_cast<int>(tokens_.size());
  index_[token] = id;
  tokens_.push_back(token);
  freqs_.push_back(freq);
  return id;
}

std::vector<int> Vocabulary::encode(
    const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode_ids(
    const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::serialized() const {
  std::ostringstream os;
  for (int i = kNumReserved; i < size(); ++i)
    os << tokens_[i] << "\t" << freqs_[i] << "\n";
  return os.str();
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("vocab: cannot write " + path.string());
  out << serialized();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("vocab: cannot read " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("vocab: malformed line in " + path.string());
    v.add(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
  }
  return v;
}

std::string Vocabulary::content_hash() const { return sha256_hex(serialized()); }

}  // namespace canto
