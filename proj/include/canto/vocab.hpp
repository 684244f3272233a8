// Token <-> id mapping with reserved control tokens.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace canto {

enum class Lang { L1, L2 };

inline std::string_view to_string(Lang lang) {
  return lang == Lang::L1 ? "L1" : "L2";
}
inline Lang other(Lang lang) { return lang == Lang::L1 ? Lang::L2 : Lang::L1; }

// Reserved ids precede all learned tokens. Both language-specific <BOS>
// tokens are always present so either decoder can address its own.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;
  static constexpr int kBosL1 = 3;
  static constexpr int kBosL2 = 4;
  static constexpr int kNumReserved = 5;

  Vocabulary();

  // Learned tokens ordered by descending frequency, ties by token string.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences,
                          std::uint64_t min_count = 1);

  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  std::uint64_t frequency(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  int bos(Lang lang) const { return lang == Lang::L1 ? kBosL1 : kBosL2; }

  // Appends a learned token; returns its id (existing id when present).
  int add(const std::string& token, std::uint64_t freq = 0);

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode_ids(const std::vector<int>& ids) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  std::string serialized() const;  // canonical text form, used for hashing
  std::string content_hash() const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace canto
