#include "canto/config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace canto {

std::string_view to_string(EmbedRoute route) {
  switch (route) {
    case EmbedRoute::Mapping: return "mapping";
    case EmbedRoute::Concat: return "concat";
    case EmbedRoute::PivotPrivate: return "pivot-private";
  }
  return "unknown";
}

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "config validation failed:";
  for (const auto& s : v) out += "\n  " + s;
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> v)
    : std::runtime_error(join_violations(v)), violations(std::move(v)) {}

std::map<std::string, std::string> parse_flat_kv(const std::string& text) {
  std::map<std::string, std::string> out;
  std::vector<std::string> violations;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      violations.push_back("line " + std::to_string(lineno) +
                           ": expected key = value");
      continue;
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      violations.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    if (out.count(key)) {
      violations.push_back(key + ": duplicate key");
      continue;
    }
    out[key] = value;
  }
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return out;
}

namespace {

// Typed accessors that record violations instead of throwing one at a time.
class Checker {
 public:
  Checker(const std::map<std::string, std::string>& kv,
          const std::filesystem::path& dir)
      : kv_(kv), dir_(dir) {}

  bool has(const std::string& key) {
    known_.insert(key);
    return kv_.count(key) > 0;
  }

  std::string str(const std::string& key, const std::string& dflt) {
    known_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  std::string enum_str(const std::string& key, const std::string& dflt,
                       const std::set<std::string>& allowed) {
    std::string v = str(key, dflt);
    if (!allowed.count(v)) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
      fail(key, "must be one of " + opts);
      return dflt;
    }
    return v;
  }

  std::int64_t integer(const std::string& key, std::int64_t dflt,
                       std::int64_t lo, std::int64_t hi) {
    known_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
      std::size_t used = 0;
      std::int64_t v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
      if (v < lo || v > hi) {
        fail(key, "out of range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
        return dflt;
      }
      return v;
    } catch (const std::exception&) {
      fail(key, "not an integer: " + it->second);
      return dflt;
    }
  }

  double real(const std::string& key, double dflt, double lo, double hi) {
    known_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
      std::size_t used = 0;
      double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
      if (v < lo || v > hi) {
        fail(key, "out of range");
        return dflt;
      }
      return v;
    } catch (const std::exception&) {
      fail(key, "not a number: " + it->second);
      return dflt;
    }
  }

  bool boolean(const std::string& key, bool dflt) {
    std::string v = enum_str(key, dflt ? "true" : "false", {"true", "false"});
    return v == "true";
  }

  std::optional<std::filesystem::path> path_opt(const std::string& key) {
    known_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::filesystem::path p(it->second);
    if (p.is_relative()) p = dir_ / p;
    if (!std::filesystem::exists(p)) {
      fail(key, "path does not exist: " + p.string());
      return std::nullopt;
    }
    return p;
  }

  void fail(const std::string& key, const std::string& reason) {
    violations_.push_back(key + ": " + reason);
  }

  void reject_unknown() {
    for (const auto& [key, value] : kv_)
      if (!known_.count(key)) violations_.push_back(key + ": unknown key");
  }

  std::vector<std::string> take_violations() { return std::move(violations_); }
  bool ok() const { return violations_.empty(); }

 private:
  const std::map<std::string, std::string>& kv_;
  std::filesystem::path dir_;
  std::set<std::string> known_;
  std::vector<std::string> violations_;
};

}  // namespace

std::string ExperimentConfig::subset_canonical(
    const std::vector<std::string>& keys) const {
  std::string out;
  for (const auto& key : keys) {
    auto it = entries.find(key);
    if (it != entries.end()) out += key + " = " + it->second + "\n";
  }
  return out;
}

ExperimentConfig validate_config_text(const std::string& text,
                                      const std::filesystem::path& config_dir) {
  auto kv = parse_flat_kv(text);
  Checker c(kv, config_dir);
  ExperimentConfig cfg;
  cfg.config_dir = config_dir;
  cfg.entries = kv;

  cfg.seed = static_cast<std::uint64_t>(
      c.integer("seed", 42, 0, std::numeric_limits<std::int64_t>::max()));

  cfg.l1_raw = c.path_opt("l1_raw");
  cfg.l2_raw = c.path_opt("l2_raw");
  cfg.l1_corpus = c.path_opt("l1_corpus");
  cfg.l2_corpus = c.path_opt("l2_corpus");
  cfg.pipeline_l1_label =
      c.enum_str("pipeline.l1_label", "cantonese",
                 {"cantonese", "mandarin", "ambiguous", "all"});
  cfg.pipeline_l2_label =
      c.enum_str("pipeline.l2_label", "mandarin",
                 {"cantonese", "mandarin", "ambiguous", "all"});
  cfg.balanced_target = static_cast<std::uint64_t>(
      c.integer("balanced_target", 0, 0, std::numeric_limits<std::int64_t>::max()));

  std::string scheme = c.enum_str("scheme", "char", {"char", "word", "bpe"});
  cfg.scheme = scheme == "char"   ? TokenScheme::Char
               : scheme == "word" ? TokenScheme::Word
                                  : TokenScheme::Bpe;
  cfg.lexicon_l1 = c.path_opt("lexicon_l1");
  cfg.lexicon_l2 = c.path_opt("lexicon_l2");

  cfg.bpe_num_merges =
      static_cast<std::uint64_t>(c.integer("bpe.num_merges", 50000, 0, 10000000));
  cfg.bpe_mode = c.enum_str("bpe.mode", "joint", {"joint", "separate"}) == "joint"
                     ? BpeMode::Joint
                     : BpeMode::Separate;

  std::string route =
      c.enum_str("embed.route", "concat", {"mapping", "concat", "pivot-private"});
  cfg.embed_route = route == "mapping"  ? EmbedRoute::Mapping
                    : route == "concat" ? EmbedRoute::Concat
                                        : EmbedRoute::PivotPrivate;
  cfg.embed_dim = static_cast<int>(c.integer("embed.dim", 512, 1, 65536));
  cfg.embed_window = static_cast<int>(c.integer("embed.window", 5, 1, 1000));
  cfg.embed_negatives = static_cast<int>(c.integer("embed.negatives", 5, 1, 1000));
  cfg.embed_epochs = static_cast<int>(c.integer("embed.epochs", 5, 1, 10000));
  cfg.embed_lr = c.real("embed.lr", 0.025, 1e-9, 10.0);
  cfg.embed_min_count =
      static_cast<std::uint64_t>(c.integer("embed.min_count", 1, 1, 1000000));
  cfg.embed_self_learning =
      static_cast<int>(c.integer("embed.self_learning", 0, 0, 1000));

  std::string variant =
      c.enum_str("model.variant", "transformer", {"gru", "transformer"});
  cfg.model.variant =
      variant == "gru" ? ModelVariant::Gru : ModelVariant::Transformer;
  cfg.model.scheme = cfg.scheme;
  cfg.model.d_model = static_cast<int>(c.integer("model.d_model", 512, 2, 65536));
  cfg.model.heads = static_cast<int>(c.integer("model.heads", 8, 1, 256));
  cfg.model.ffn_dim = static_cast<int>(c.integer("model.ffn_dim", 2048, 1, 1 << 20));
  cfg.model.dropout = c.real("model.dropout", 0.0, 0.0, 0.999);
  cfg.model.max_len = static_cast<int>(c.integer("model.max_len", 100, 1, 100000));
  cfg.model.shared_decoder_layers =
      static_cast<int>(c.integer("model.shared_decoder_layers", 3, 0, 4));
  if (cfg.model.variant == ModelVariant::Gru) {
    cfg.model.enc_layers = cfg.model.dec_layers = 2;
    cfg.model.freeze_embeddings = true;  // fixed cross-lingual embeddings
  } else {
    cfg.model.enc_layers = cfg.model.dec_layers = 4;
    cfg.model.freeze_embeddings = false;
  }

  cfg.train.steps = static_cast<std::uint64_t>(
      c.integer("train.steps", 1000, 0, std::numeric_limits<std::int64_t>::max()));
  cfg.train.batch_size = static_cast<int>(c.integer("train.batch_size", 8, 1, 65536));
  cfg.train.dae_ratio = static_cast<int>(c.integer("train.dae_ratio", 1, 1, 1000));
  cfg.train.bt_ratio = static_cast<int>(c.integer("train.bt_ratio", 1, 0, 1000));
  cfg.train.warmup_frac = c.real("train.warmup_frac", 0.1, 0.0, 1.0);
  cfg.train.lr = c.real("train.lr", 0.1, 1e-9, 100.0);
  cfg.train.grad_clip = c.real("train.grad_clip", 5.0, 0.0, 1e9);
  cfg.train.p_drop = c.real("train.p_drop", 0.1, 0.0, 0.999);
  cfg.train.shuffle_k = static_cast<int>(c.integer("train.shuffle_k", 3, 0, 10000));
  cfg.train.checkpoint_every = static_cast<std::uint64_t>(
      c.integer("train.checkpoint_every", 1000, 0,
                std::numeric_limits<std::int64_t>::max()));
  cfg.train.gen_max_len =
      static_cast<int>(c.integer("train.gen_max_len", 0, 0, 100000));
  cfg.train.seed = cfg.seed;

  cfg.eval_test_src = c.path_opt("eval.test_src");
  cfg.eval_test_ref = c.path_opt("eval.test_ref");
  cfg.eval_src_lang =
      c.enum_str("eval.src_lang", "L1", {"L1", "L2"}) == "L1" ? Lang::L1
                                                              : Lang::L2;
  cfg.eval_beam = static_cast<int>(c.integer("eval.beam", 1, 1, 1000));
  cfg.eval_max_len = static_cast<int>(c.integer("eval.max_len", 0, 0, 100000));
  cfg.eval_baseline_table = c.path_opt("eval.baseline_table");
  cfg.eval_strip_punct = c.boolean("eval.strip_punct", false);

  c.reject_unknown();

  // Cross-field constraints.
  if (!cfg.l1_raw && !cfg.l1_corpus)
    c.fail("l1_corpus", "either l1_raw or l1_corpus is required");
  if (!cfg.l2_raw && !cfg.l2_corpus)
    c.fail("l2_corpus", "either l2_raw or l2_corpus is required");
  if (cfg.eval_test_src.has_value() != cfg.eval_test_ref.has_value())
    c.fail("eval.test_ref", "test_src and test_ref must be given together");
  if (cfg.scheme == TokenScheme::Bpe && cfg.bpe_num_merges == 0)
    cfg.warnings.push_back(
        "bpe.num_merges = 0 degenerates to character splitting");
  if (cfg.embed_route == EmbedRoute::PivotPrivate) {
    if (cfg.model.d_model != 512)
      c.fail("model.d_model",
             "pivot-private embeddings are 256+256, so d_model must be 512");
  } else if (cfg.embed_dim != cfg.model.d_model) {
    c.fail("embed.dim", "must equal model.d_model for route " + route);
  }

  // Paper pairings are advisory: mapping was applied to the RNN models,
  // concat to both, pivot-private to transformers.
  if (cfg.embed_route == EmbedRoute::Mapping &&
      cfg.model.variant == ModelVariant::Transformer)
    cfg.warnings.push_back(
        "embed.route=mapping with a transformer departs from the published "
        "pairings (mapping was used with the RNN models)");
  if (cfg.embed_route == EmbedRoute::PivotPrivate &&
      cfg.model.variant == ModelVariant::Gru)
    cfg.warnings.push_back(
        "embed.route=pivot-private with the GRU departs from the published "
        "pairings (pivot-private was used with transformers)");

  if (!c.ok()) throw ConfigError(c.take_violations());
  try {
    cfg.model.validate();
  } catch (const std::exception& e) {
    throw ConfigError({std::string("model: ") + e.what()});
  }
  try {
    cfg.train.validate();
  } catch (const std::exception& e) {
    throw ConfigError({std::string("train: ") + e.what()});
  }
  return cfg;
}

ExperimentConfig validate_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"config: cannot read " + path.string()});
  std::ostringstream os;
  os << in.rdbuf();
  return validate_config_text(os.str(),
                              std::filesystem::absolute(path).parent_path());
}

}  // namespace canto
