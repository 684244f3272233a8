#include "canto/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "canto/unicode.hpp"

namespace canto {

namespace {

// Marker characters from the Mandarin-Cantonese filter.
const std::unordered_set<char32_t>& cantonese_markers() {
  static const std::unordered_set<char32_t> kSet = [] {
    std::unordered_set<char32_t> s;
    for (char32_t cp : U"咗唔係喺啦嘅既咁佢哋冇仲嘢乜噉咪咩俾呢嚟黎啫喂喇喎睇")
      if (cp) s.insert(cp);
    return s;
  }();
  return kSet;
}

const std::unordered_set<char32_t>& mandarin_markers() {
  static const std::unordered_set<char32_t> kSet = [] {
    std::unordered_set<char32_t> s;
    for (char32_t cp : U"是的他她沒也看說在说")
      if (cp) s.insert(cp);
    return s;
  }();
  return kSet;
}

std::u32string trim(const std::u32string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && uni::is_space(s[b])) ++b;
  while (e > b && uni::is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

bool is_ascii_graph(char32_t cp) { return cp > 0x20 && cp < 0x7F; }

// Matches "scheme://" at position i ([A-Za-z][A-Za-z0-9+.-]*://) or "www.".
bool starts_url(const std::u32string& s, std::size_t i, std::size_t* span_end) {
  const std::size_t n = s.size();
  if (i + 4 <= n && (s[i] == 'w' || s[i] == 'W') &&
      (s[i + 1] == 'w' || s[i + 1] == 'W') &&
      (s[i + 2] == 'w' || s[i + 2] == 'W') && s[i + 3] == '.') {
    std::size_t j = i + 4;
    while (j < n && is_ascii_graph(s[j])) ++j;
    *span_end = j;
    return true;
  }
  if (!uni::is_ascii_letter(s[i])) return false;
  std::size_t j = i + 1;
  while (j < n && (uni::is_ascii_letter(s[j]) || uni::is_ascii_digit(s[j]) ||
                   s[j] == '+' || s[j] == '.' || s[j] == '-'))
    ++j;
  if (j + 3 <= n && s[j] == ':' && s[j + 1] == '/' && s[j + 2] == '/') {
    j += 3;
    while (j < n && is_ascii_graph(s[j])) ++j;
    *span_end = j;
    return true;
  }
  return false;
}

bool is_hashtag_char(char32_t cp) {
  return uni::is_ascii_letter(cp) || uni::is_ascii_digit(cp) || cp == '_' ||
         uni::is_cjk_ideograph(cp);
}

}  // namespace

std::string_view to_string(LanguageLabel label) {
  switch (label) {
    case LanguageLabel::Cantonese: return "cantonese";
    case LanguageLabel::Mandarin: return "mandarin";
    case LanguageLabel::Ambiguous: return "ambiguous";
    case LanguageLabel::Foreign: return "foreign";
  }
  return "unknown";
}

std::vector<Sentence> cut_sentences(const RawDocument& doc) {
  auto decoded = uni::decode_utf8(doc.text);
  if (!decoded) throw std::invalid_argument("cut_sentences: invalid UTF-8");
  const std::u32string& cps = *decoded;

  std::vector<Sentence> out;
  std::u32string cur;
  auto flush = [&] {
    std::u32string t = trim(cur);
    if (!t.empty())
      out.push_back({uni::encode_utf8(t), doc.source_id, LanguageLabel::Ambiguous});
    cur.clear();
  };

  const std::size_t n = cps.size();
  for (std::size_t i = 0; i < n; ++i) {
    char32_t cp = cps[i];
    if (cp == '\n') {
      flush();
      continue;
    }
    cur.push_back(cp);
    if (uni::is_cut_punct(cp)) {
      if (cp == '.') {
        // Half-width dot cuts only before whitespace or end of text.
        bool at_boundary = (i + 1 == n) || uni::is_space(cps[i + 1]);
        if (!at_boundary) continue;
      }
      flush();
    }
  }
  flush();
  return out;
}

Sentence strip_noise(const Sentence& s) {
  auto decoded = uni::decode_utf8(s.text);
  if (!decoded) throw std::invalid_argument("strip_noise: invalid UTF-8");
  const std::u32string& cps = *decoded;
  const std::size_t n = cps.size();

  std::u32string kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t span_end = 0;
    if (starts_url(cps, i, &span_end)) {
      i = span_end;
      continue;
    }
    if (cps[i] == '#' && i + 1 < n && is_hashtag_char(cps[i + 1])) {
      std::size_t j = i + 1;
      while (j < n && is_hashtag_char(cps[j])) ++j;
      i = j;
      continue;
    }
    if (uni::is_emoji(cps[i])) {
      ++i;
      continue;
    }
    kept.push_back(cps[i]);
    ++i;
  }

  // Collapse whitespace runs to a single space and trim.
  std::u32string collapsed;
  collapsed.reserve(kept.size());
  bool in_space = false;
  for (char32_t cp : kept) {
    if (uni::is_space(cp)) {
      in_space = true;
      continue;
    }
    if (in_space && !collapsed.empty()) collapsed.push_back(' ');
    in_space = false;
    collapsed.push_back(cp);
  }

  return {uni::encode_utf8(collapsed), s.source_id, s.label};
}

int count_cantonese_markers(const std::string& text) {
  auto decoded = uni::decode_utf8(text);
  if (!decoded) return 0;
  int c = 0;
  for (char32_t cp : *decoded)
    if (cantonese_markers().count(cp)) ++c;
  return c;
}

int count_mandarin_markers(const std::string& text) {
  auto decoded = uni::decode_utf8(text);
  if (!decoded) return 0;
  int c = 0;
  for (char32_t cp : *decoded)
    if (mandarin_markers().count(cp)) ++c;
  return c;
}

LanguageLabel classify_language(const Sentence& s) {
  int canto = count_cantonese_markers(s.text);
  int mando = count_mandarin_markers(s.text);
  if (canto > mando) return LanguageLabel::Cantonese;
  if (mando > canto) return LanguageLabel::Mandarin;
  return LanguageLabel::Ambiguous;
}

bool foreign_filter_keep(const Sentence& s) {
  auto decoded = uni::decode_utf8(s.text);
  if (!decoded || decoded->empty()) return false;
  std::size_t cjk = 0;
  for (char32_t cp : *decoded)
    if (uni::is_cjk_ideograph(cp)) ++cjk;
  double ratio = static_cast<double>(cjk) / static_cast<double>(decoded->size());
  return ratio >= 0.05;
}

int length_bucket(std::size_t n_chars) {
  if (n_chars >= 100) return kNumLengthBuckets - 1;
  return static_cast<int>(n_chars / 5);
}

int bucket_low(int bucket) { return bucket * 5; }

void PipelineStats::merge(const PipelineStats& other) {
  input_documents += other.input_documents;
  invalid_utf8_dropped += other.invalid_utf8_dropped;
  sentences_cut += other.sentences_cut;
  sentences_noise_stripped += other.sentences_noise_stripped;
  dropped_empty_after_strip += other.dropped_empty_after_strip;
  dropped_foreign += other.dropped_foreign;
  label_cantonese += other.label_cantonese;
  label_mandarin += other.label_mandarin;
  label_ambiguous += other.label_ambiguous;
  for (int b = 0; b < kNumLengthBuckets; ++b)
    length_histogram[b] += other.length_histogram[b];
}

std::string PipelineStats::report() const {
  std::ostringstream os;
  os << "input_documents:" << input_documents << "\n"
     << "invalid_utf8_dropped:" << invalid_utf8_dropped << "\n"
     << "sentences_cut:" << sentences_cut << "\n"
     << "sentences_noise_stripped:" << sentences_noise_stripped << "\n"
     << "dropped_empty_after_strip:" << dropped_empty_after_strip << "\n"
     << "dropped_foreign:" << dropped_foreign << "\n"
     << "label_cantonese:" << label_cantonese << "\n"
     << "label_mandarin:" << label_mandarin << "\n"
     << "label_ambiguous:" << label_ambiguous << "\n"
     << "retained:" << retained() << "\n";
  return os.str();
}

std::string PipelineStats::histogram_table() const {
  std::ostringstream os;
  for (int b = 0; b < kNumLengthBuckets; ++b)
    os << bucket_low(b) << "\t" << length_histogram[b] << "\n";
  return os.str();
}

std::vector<Sentence> downsample_balanced(const std::vector<Sentence>& corpus,
                                          std::size_t target_size,
                                          std::uint64_t seed) {
  if (target_size > corpus.size())
    throw std::invalid_argument("insufficient data");

  // Indices per length bucket, in corpus order.
  std::vector<std::vector<std::size_t>> buckets(kNumLengthBuckets);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    buckets[length_bucket(uni::codepoint_count(corpus[i].text))].push_back(i);

  const double total = static_cast<double>(corpus.size());
  std::vector<std::size_t> quota(kNumLengthBuckets, 0);
  std::vector<std::pair<double, int>> remainders;  // (-frac, bucket)
  std::size_t assigned = 0;
  for (int b = 0; b < kNumLengthBuckets; ++b) {
    double share = buckets[b].size() / total * static_cast<double>(target_size);
    quota[b] = static_cast<std::size_t>(share);
    assigned += quota[b];
    remainders.push_back({-(share - static_cast<double>(quota[b])), b});
  }
  std::sort(remainders.begin(), remainders.end());
  for (auto& [negfrac, b] : remainders) {
    if (assigned >= target_size) break;
    if (quota[b] < buckets[b].size()) {
      ++quota[b];
      ++assigned;
    }
  }
  // Leftover happens only when rounded-up buckets were already full; give the
  // remainder to any bucket with spare capacity, largest first.
  if (assigned < target_size) {
    for (int b = 0; b < kNumLengthBuckets && assigned < target_size; ++b) {
      while (quota[b] < buckets[b].size() && assigned < target_size) {
        ++quota[b];
        ++assigned;
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<char> selected(corpus.size(), 0);
  for (int b = 0; b < kNumLengthBuckets; ++b) {
    auto& idx = buckets[b];
    std::size_t k = quota[b];
    // Partial Fisher-Yates: the first k entries become the sample.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, idx.size() - 1);
      std::swap(idx[i], idx[dist(rng)]);
      selected[idx[i]] = 1;
    }
  }

  std::vector<Sentence> out;
  out.reserve(target_size);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (selected[i]) out.push_back(corpus[i]);
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);

  PipelineResult result;
  result.cantonese_path = config.out_dir / "cantonese.txt";
  result.mandarin_path = config.out_dir / "mandarin.txt";
  result.ambiguous_path = config.out_dir / "ambiguous.txt";

  std::ofstream out_canto(result.cantonese_path, std::ios::binary);
  std::ofstream out_mando(result.mandarin_path, std::ios::binary);
  std::ofstream out_ambig(result.ambiguous_path, std::ios::binary);
  if (!out_canto || !out_mando || !out_ambig)
    throw std::runtime_error("pipeline: cannot write to output directory " +
                             config.out_dir.string());

  PipelineStats stats;
  for (const auto& path : config.inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pipeline: cannot read " + path.string());
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ++stats.input_documents;
      if (!uni::is_valid_utf8(line)) {
        ++stats.invalid_utf8_dropped;
        continue;
      }
      RawDocument doc{path.string() + ":" + std::to_string(lineno), line};
      for (const Sentence& raw : cut_sentences(doc)) {
        ++stats.sentences_cut;
        Sentence cleaned = strip_noise(raw);
        if (cleaned.text != raw.text) ++stats.sentences_noise_stripped;
        if (cleaned.text.empty()) {
          ++stats.dropped_empty_after_strip;
          continue;
        }
        if (!foreign_filter_keep(cleaned)) {
          ++stats.dropped_foreign;
          continue;
        }
        cleaned.label = classify_language(cleaned);
        ++stats.length_histogram[length_bucket(uni::codepoint_count(cleaned.text))];
        switch (cleaned.label) {
          case LanguageLabel::Cantonese:
            ++stats.label_cantonese;
            out_canto << cleaned.text << "\n";
            break;
          case LanguageLabel::Mandarin:
            ++stats.label_mandarin;
            out_mando << cleaned.text << "\n";
            break;
          default:
            ++stats.label_ambiguous;
            out_ambig << cleaned.text << "\n";
            break;
        }
      }
    }
  }

  std::ofstream stats_out(config.out_dir / "stats.txt", std::ios::binary);
  stats_out << stats.report();
  std::ofstream hist_out(config.out_dir / "length_histogram.tsv", std::ios::binary);
  hist_out << stats.histogram_table();

  result.stats = stats;
  return result;
}

}  // namespace canto
