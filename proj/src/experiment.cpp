#include "canto/experiment.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <sstream>

#include "canto/bleu.hpp"
#include "canto/bpe.hpp"
#include "canto/corpus.hpp"
#include "canto/embedding.hpp"
#include "canto/hash.hpp"
#include "canto/mapping.hpp"
#include "canto/skipgram.hpp"
#include "canto/translate.hpp"

namespace canto {

namespace fs = std::filesystem;

namespace {

class DirLock {
 public:
  explicit DirLock(const fs::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw std::runtime_error(
          "experiment: output directory is locked by another run (" +
          path.string() + ")");
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_;
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& l : lines) out << l << "\n";
}

std::vector<std::vector<std::string>> read_token_file(const fs::path& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    out.push_back(std::move(toks));
  }
  return out;
}

std::vector<std::string> list_artifacts(const fs::path& dir) {
  std::vector<std::string> rels;
  if (!fs::exists(dir)) return rels;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    rels.push_back(fs::relative(entry.path(), dir).generic_string());
  }
  std::sort(rels.begin(), rels.end());
  return rels;
}

std::string file_hash_item(const std::string& role, const fs::path& p) {
  return "file:" + role + "=" + sha256_file(p) + "\n";
}

}  // namespace

std::string RunManifest::serialized() const {
  std::ostringstream os;
  os << "manifest_version=1\n";
  os << "tool_version=" << tool_version << "\n";
  os << "config_hash=" << config_hash << "\n";
  os << "created_unix=" << created_unix << "\n";
  for (const auto& st : stages) {
    os << "stage." << st.name << ".inputs_hash=" << st.inputs_hash << "\n";
    os << "stage." << st.name << ".status=" << st.status << "\n";
    for (const auto& [rel, hash] : st.outputs)
      os << "stage." << st.name << ".output." << rel << "=" << hash << "\n";
  }
  return os.str();
}

RunManifest RunManifest::parse(const std::string& text) {
  RunManifest m;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("manifest: malformed line " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "manifest_version") continue;
    if (key == "tool_version") {
      m.tool_version = value;
    } else if (key == "config_hash") {
      m.config_hash = value;
    } else if (key == "created_unix") {
      m.created_unix = value;
    } else if (key.rfind("stage.", 0) == 0) {
      std::string rest = key.substr(6);
      auto dot = rest.find('.');
      if (dot == std::string::npos)
        throw std::runtime_error("manifest: malformed stage key " + key);
      std::string name = rest.substr(0, dot);
      std::string field = rest.substr(dot + 1);
      auto it = std::find_if(m.stages.begin(), m.stages.end(),
                             [&](const StageRecord& s) { return s.name == name; });
      if (it == m.stages.end()) {
        m.stages.push_back(StageRecord{name, "", "", {}});
        it = m.stages.end() - 1;
      }
      if (field == "inputs_hash") it->inputs_hash = value;
      else if (field == "status") it->status = value;
      else if (field.rfind("output.", 0) == 0)
        it->outputs[field.substr(7)] = value;
      else throw std::runtime_error("manifest: unknown stage field " + field);
    } else {
      throw std::runtime_error("manifest: unknown key " + key);
    }
  }
  return m;
}

void RunManifest::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("manifest: cannot write " + path.string());
  out << serialized();
}

RunManifest RunManifest::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

const StageRecord* RunManifest::find_stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<std::string> RunManifest::artifacts() const {
  std::vector<std::string> out;
  for (const auto& s : stages)
    for (const auto& [rel, hash] : s.outputs) out.push_back(rel);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Shared state threaded through the stages.
struct Runner {
  const ExperimentConfig& cfg;
  fs::path out_dir;
  RunManifest prev;
  bool have_prev = false;
  RunManifest cur;
  std::vector<std::string> statuses;

  bool cache_hit(const std::string& name, const std::string& inputs_hash,
                 StageRecord& rec) {
    if (!have_prev) return false;
    const StageRecord* old = prev.find_stage(name);
    if (!old || old->status == "skipped" || old->inputs_hash != inputs_hash)
      return false;
    for (const auto& [rel, hash] : old->outputs) {
      fs::path p = out_dir / rel;
      if (!fs::exists(p) || sha256_file(p) != hash) return false;
    }
    rec.outputs = old->outputs;
    return true;
  }

  // fn fills `stage_dir`; every file recursively below it becomes an output.
  void stage(const std::string& name, const std::string& inputs_hash,
             const std::function<void(const fs::path&)>& fn) {
    StageRecord rec;
    rec.name = name;
    rec.inputs_hash = sha256_hex(inputs_hash);
    fs::path stage_dir = out_dir / name;
    if (cache_hit(name, rec.inputs_hash, rec)) {
      rec.status = "cached";
    } else {
      fs::remove_all(stage_dir);
      fs::create_directories(stage_dir);
      fn(stage_dir);
      rec.status = "run";
      for (const auto& rel : list_artifacts(stage_dir))
        rec.outputs[name + "/" + rel] = sha256_file(stage_dir / rel);
    }
    statuses.push_back(name + ":" + rec.status);
    cur.stages.push_back(std::move(rec));
  }

  void skipped(const std::string& name) {
    StageRecord rec;
    rec.name = name;
    rec.status = "skipped";
    statuses.push_back(name + ":skipped");
    cur.stages.push_back(std::move(rec));
  }
};

std::vector<Sentence> lines_to_sentences(const std::vector<std::string>& lines) {
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back({l, "", LanguageLabel::Ambiguous});
  return out;
}

void run_pipeline_stage(Runner& r) {
  const ExperimentConfig& cfg = r.cfg;
  std::string inputs = cfg.subset_canonical(
      {"seed", "pipeline.l1_label", "pipeline.l2_label", "balanced_target"});
  if (cfg.l1_raw) inputs += file_hash_item("l1_raw", *cfg.l1_raw);
  if (cfg.l2_raw) inputs += file_hash_item("l2_raw", *cfg.l2_raw);
  if (!cfg.l1_raw && cfg.l1_corpus)
    inputs += file_hash_item("l1_corpus", *cfg.l1_corpus);
  if (!cfg.l2_raw && cfg.l2_corpus)
    inputs += file_hash_item("l2_corpus", *cfg.l2_corpus);

  r.stage("pipeline", inputs, [&](const fs::path& dir) {
    auto produce = [&](Lang lang) {
      const bool is_l1 = lang == Lang::L1;
      const auto& raw = is_l1 ? cfg.l1_raw : cfg.l2_raw;
      const auto& corpus = is_l1 ? cfg.l1_corpus : cfg.l2_corpus;
      const std::string& label =
          is_l1 ? cfg.pipeline_l1_label : cfg.pipeline_l2_label;
      const fs::path out_path = dir / (is_l1 ? "l1.txt" : "l2.txt");
      std::vector<std::string> lines;
      if (raw) {
        PipelineConfig pc;
        pc.inputs = {*raw};
        pc.out_dir = dir / (is_l1 ? "l1" : "l2");
        PipelineResult res = run_pipeline(pc);
        if (label == "all") {
          for (const auto& p : {res.cantonese_path, res.mandarin_path,
                                res.ambiguous_path}) {
            auto part = read_lines(p);
            lines.insert(lines.end(), part.begin(), part.end());
          }
        } else {
          fs::path src = label == "cantonese"  ? res.cantonese_path
                         : label == "mandarin" ? res.mandarin_path
                                               : res.ambiguous_path;
          lines = read_lines(src);
        }
      } else {
        lines = read_lines(*corpus);
      }
      // The balanced-dataset construction downsamples the larger (L2) side.
      if (!is_l1 && cfg.balanced_target > 0) {
        std::vector<Sentence> sents = lines_to_sentences(lines);
        std::vector<Sentence> sampled =
            downsample_balanced(sents, cfg.balanced_target, cfg.seed);
        lines.clear();
        for (const auto& s : sampled) lines.push_back(s.text);
      }
      write_lines(out_path, lines);
    };
    produce(Lang::L1);
    produce(Lang::L2);
  });
}

void run_tokenize_stage(Runner& r) {
  const ExperimentConfig& cfg = r.cfg;
  std::string inputs = cfg.subset_canonical({"scheme"});
  inputs += file_hash_item("l1", r.out_dir / "pipeline/l1.txt");
  inputs += file_hash_item("l2", r.out_dir / "pipeline/l2.txt");
  if (cfg.lexicon_l1) inputs += file_hash_item("lexicon_l1", *cfg.lexicon_l1);
  if (cfg.lexicon_l2) inputs += file_hash_item("lexicon_l2", *cfg.lexicon_l2);

  r.stage("tokenize", inputs, [&](const fs::path& dir) {
    auto tokenize_file = [&](const fs::path& in_path, const fs::path& out_path,
                             const std::optional<fs::path>& lexicon_path) {
      Lexicon lex;
      if (lexicon_path) lex = Lexicon::load(*lexicon_path);
      std::vector<std::string> out;
      for (const auto& line : read_lines(in_path)) {
        if (line.empty()) continue;
        Sentence s{line, "", LanguageLabel::Ambiguous};
        TokenizedSentence toks = cfg.scheme == TokenScheme::Char
                                     ? char_tokenize(s)
                                     : word_tokenize(s, lex);
        if (!toks.tokens.empty()) out.push_back(toks.joined());
      }
      write_lines(out_path, out);
    };
    tokenize_file(r.out_dir / "pipeline/l1.txt", dir / "l1.tok", cfg.lexicon_l1);
    tokenize_file(r.out_dir / "pipeline/l2.txt", dir / "l2.tok", cfg.lexicon_l2);
  });
}

void run_bpe_stage(Runner& r) {
  const ExperimentConfig& cfg = r.cfg;
  if (cfg.scheme != TokenScheme::Bpe) {
    r.skipped("bpe");
    return;
  }
  std::string inputs = cfg.subset_canonical({"bpe.num_merges", "bpe.mode"});
  inputs += file_hash_item("l1", r.out_dir / "tokenize/l1.tok");
  inputs += file_hash_item("l2", r.out_dir / "tokenize/l2.tok");

  r.stage("bpe", inputs, [&](const fs::path& dir) {
    auto l1 = read_token_file(r.out_dir / "tokenize/l1.tok");
    auto l2 = read_token_file(r.out_dir / "tokenize/l2.tok");
    std::vector<WordCounts> corpora{count_words(l1), count_words(l2)};
    std::vector<MergeTable> tables =
        learn_bpe(corpora, cfg.bpe_num_merges, cfg.bpe_mode);
    auto apply_file = [&](const std::vector<std::vector<std::string>>& sents,
                          const MergeTable& table, const fs::path& out_path) {
      BpeApplier applier(table);
      std::vector<std::string> out;
      for (const auto& sent : sents) {
        TokenizedSentence words;
        words.scheme = TokenScheme::Word;
        words.tokens = sent;
        out.push_back(applier.apply(words).joined());
      }
      write_lines(out_path, out);
    };
    if (cfg.bpe_mode == BpeMode::Joint) {
      tables[0].save(dir / "merges.txt");
      apply_file(l1, tables[0], dir / "l1.tok");
      apply_file(l2, tables[0], dir / "l2.tok");
    } else {
      tables[0].save(dir / "merges.l1.txt");
      tables[1].save(dir / "merges.l2.txt");
      apply_file(l1, tables[0], dir / "l1.tok");
      apply_file(l2, tables[1], dir / "l2.tok");
    }
  });
}

fs::path token_file(const Runner& r, Lang lang) {
  const char* name = lang == Lang::L1 ? "l1.tok" : "l2.tok";
  return r.cfg.scheme == TokenScheme::Bpe ? r.out_dir / "bpe" / name
                                          : r.out_dir / "tokenize" / name;
}

void run_embed_stage(Runner& r) {
  const ExperimentConfig& cfg = r.cfg;
  std::string inputs = cfg.subset_canonical(
      {"seed", "embed.route", "embed.dim", "embed.window", "embed.negatives",
       "embed.epochs", "embed.lr", "embed.min_count", "embed.self_learning"});
  inputs += file_hash_item("l1", token_file(r, Lang::L1));
  inputs += file_hash_item("l2", token_file(r, Lang::L2));

  r.stage("embed", inputs, [&](const fs::path& dir) {
    auto l1 = read_token_file(token_file(r, Lang::L1));
    auto l2 = read_token_file(token_file(r, Lang::L2));

    SkipgramConfig sg;
    sg.window = cfg.embed_window;
    sg.negatives = cfg.embed_negatives;
    sg.epochs = cfg.embed_epochs;
    sg.lr = cfg.embed_lr;
    sg.min_count = cfg.embed_min_count;

    auto train_on = [&](const std::vector<std::vector<std::string>>& sents,
                        int dim, std::uint64_t seed) {
      SkipgramConfig c = sg;
      c.dim = dim;
      c.seed = seed;
      return SkipgramTrainer::from_sentences(sents, c).train();
    };
    auto concat = [&]() {
      std::vector<std::vector<std::string>> all = l1;
      all.insert(all.end(), l2.begin(), l2.end());
      return all;
    };

    switch (cfg.embed_route) {
      case EmbedRoute::Concat: {
        EmbeddingMatrix emb = train_on(concat(), cfg.embed_dim, cfg.seed);
        emb.save(dir / "concat.vec");
        break;
      }
      case EmbedRoute::Mapping: {
        EmbeddingMatrix x = train_on(l1, cfg.embed_dim, cfg.seed);
        EmbeddingMatrix y = train_on(l2, cfg.embed_dim, cfg.seed + 1);
        AnchorDictionary anchors = build_anchor_dict(x.vocab, y.vocab);
        anchors.save(dir / "anchors.tsv", x.vocab, y.vocab);
        MappingReport report;
        MappingMatrix w =
            learn_mapping(x, y, anchors, cfg.embed_self_learning, &report);
        EmbeddingMatrix mapped = apply_mapping(x, w);
        mapped.save(dir / "l1.vec");
        EmbeddingMatrix y_norm;
        y_norm.vocab = y.vocab;
        y_norm.vectors = normalize_rows(y.vectors);
        y_norm.save(dir / "l2.vec");
        std::ofstream info(dir / "mapping.txt", std::ios::binary);
        info << "anchors\t" << report.anchors_used << "\n"
             << "few_anchors_warning\t" << (report.few_anchors_warning ? 1 : 0)
             << "\northogonality_error\t" << w.orthogonality_error() << "\n";
        break;
      }
      case EmbedRoute::PivotPrivate: {
        EmbeddingMatrix shared = train_on(concat(), 256, cfg.seed);
        EmbeddingMatrix priv1 = train_on(l1, 256, cfg.seed + 1);
        EmbeddingMatrix priv2 = train_on(l2, 256, cfg.seed + 2);
        PivotPrivatePair pair = compose_pivot_private(shared, priv1, priv2);
        pair.l1.embedding.save(dir / "l1.vec");
        pair.l2.embedding.save(dir / "l2.vec");
        std::ofstream info(dir / "pivot.txt", std::ios::binary);
        info << "l1_missing_shared\t" << pair.l1.missing_shared << "\n"
             << "l1_missing_private\t" << pair.l1.missing_private << "\n"
             << "l2_missing_shared\t" << pair.l2.missing_shared << "\n"
             << "l2_missing_private\t" << pair.l2.missing_private << "\n";
        break;
      }
    }
  });
}

std::vector<std::vector<int>> encode_corpus(
    const std::vector<std::vector<std::string>>& sents, const Vocabulary& vocab) {
  std::vector<std::vector<int>> out;
  out.reserve(sents.size());
  for (const auto& s : sents) out.push_back(vocab.encode(s));
  return out;
}

void run_train_stage(Runner& r) {
  const ExperimentConfig& cfg = r.cfg;
  std::string inputs = cfg.subset_canonical(
      {"seed", "scheme", "embed.route", "model.variant", "model.d_model",
       "model.heads", "model.ffn_dim", "model.dropout", "model.max_len",
       "model.shared_decoder_layers", "train.steps", "train.batch_size",
       "train.dae_ratio", "train.bt_ratio", "train.warmup_frac", "train.lr",
       "train.grad_clip", "train.p_drop", "train.shuffle_k",
       "train.checkpoint_every", "train.gen_max_len"});
  inputs += file_hash_item("l1", token_file(r, Lang::L1));
  inputs += file_hash_item("l2", token_file(r, Lang::L2));
  for (const auto& rel : {"embed/concat.vec", "embed/l1.vec", "embed/l2.vec"})
    if (fs::exists(r.out_dir / rel))
      inputs += file_hash_item(rel, r.out_dir / rel);

  r.stage("train", inputs, [&](const fs::path& dir) {
    auto l1 = read_token_file(token_file(r, Lang::L1));
    auto l2 = read_token_file(token_file(r, Lang::L2));
    Vocabulary v1 = Vocabulary::build(l1);
    Vocabulary v2 = Vocabulary::build(l2);
    Seq2SeqModel model(cfg.model, std::move(v1), std::move(v2), cfg.seed);

    if (cfg.embed_route == EmbedRoute::Concat) {
      EmbeddingMatrix emb = EmbeddingMatrix::load(r.out_dir / "embed/concat.vec");
      model.set_embeddings(Lang::L1, emb);
      model.set_embeddings(Lang::L2, emb);
    } else {
      model.set_embeddings(Lang::L1,
                           EmbeddingMatrix::load(r.out_dir / "embed/l1.vec"));
      model.set_embeddings(Lang::L2,
                           EmbeddingMatrix::load(r.out_dir / "embed/l2.vec"));
    }

    std::map<std::string, std::string> extra;
    extra["corpus_l1_path"] = token_file(r, Lang::L1).string();
    extra["corpus_l2_path"] = token_file(r, Lang::L2).string();
    if (cfg.scheme == TokenScheme::Bpe) {
      fs::path merges = cfg.bpe_mode == BpeMode::Joint
                            ? r.out_dir / "bpe/merges.txt"
                            : r.out_dir / "bpe/merges.l1.txt";
      std::ifstream in(merges, std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      extra["bpe_merges"] = os.str();
    }

    Trainer trainer(model, encode_corpus(l1, model.vocab(Lang::L1)),
                    encode_corpus(l2, model.vocab(Lang::L2)), cfg.train);
    trainer.train(dir, extra);
  });
}

void run_eval_stage(Runner& r) {
  const ExperimentConfig& cfg = r.cfg;
  if (!cfg.eval_test_src) {
    r.skipped("eval");
    return;
  }
  std::string inputs = cfg.subset_canonical(
      {"eval.src_lang", "eval.beam", "eval.max_len", "eval.strip_punct",
       "scheme"});
  inputs += file_hash_item("checkpoint",
                           r.out_dir / "train/checkpoint-final.cumt");
  inputs += file_hash_item("test_src", *cfg.eval_test_src);
  inputs += file_hash_item("test_ref", *cfg.eval_test_ref);
  if (cfg.eval_baseline_table)
    inputs += file_hash_item("baseline_table", *cfg.eval_baseline_table);
  const std::optional<fs::path>& lexicon =
      cfg.eval_src_lang == Lang::L1 ? cfg.lexicon_l1 : cfg.lexicon_l2;
  if (lexicon) inputs += file_hash_item("lexicon", *lexicon);

  r.stage("eval", inputs, [&](const fs::path& dir) {
    Checkpoint ck = Checkpoint::load(r.out_dir / "train/checkpoint-final.cumt");
    LoadedModel lm = load_model(ck);

    Lexicon lex;
    if (lexicon) lex = Lexicon::load(*lexicon);
    std::optional<BpeApplier> bpe;
    if (cfg.scheme == TokenScheme::Bpe) {
      fs::path merges = cfg.bpe_mode == BpeMode::Joint
                            ? r.out_dir / "bpe/merges.txt"
                            : (cfg.eval_src_lang == Lang::L1
                                   ? r.out_dir / "bpe/merges.l1.txt"
                                   : r.out_dir / "bpe/merges.l2.txt");
      bpe.emplace(MergeTable::load(merges));
    }
    TokenizerContext tok;
    tok.scheme = cfg.scheme;
    tok.lexicon = &lex;
    if (bpe) tok.bpe = &*bpe;

    const int max_len =
        cfg.eval_max_len > 0 ? cfg.eval_max_len : lm.model->config().max_len;
    std::vector<Sentence> srcs =
        lines_to_sentences(read_lines(*cfg.eval_test_src));
    std::vector<Sentence> refs =
        lines_to_sentences(read_lines(*cfg.eval_test_ref));
    if (srcs.size() != refs.size())
      throw std::runtime_error("eval: test files are misaligned");

    std::vector<Sentence> hyps;
    hyps.reserve(srcs.size());
    std::vector<std::string> hyp_lines;
    for (const auto& s : srcs) {
      TranslationResult tr = translate(*lm.model, s, cfg.eval_src_lang, tok,
                                       cfg.eval_beam, max_len);
      hyps.push_back(tr.sentence);
      hyp_lines.push_back(tr.sentence.text);
    }
    write_lines(dir / "hypotheses.txt", hyp_lines);

    BleuReport report = char_bleu(hyps, refs, cfg.eval_strip_punct);
    std::ofstream bleu_out(dir / "bleu.txt", std::ios::binary);
    bleu_out << report.report();

    if (cfg.eval_baseline_table) {
      ConversionTable table = ConversionTable::load(*cfg.eval_baseline_table);
      BleuReport baseline = baseline_evaluate(srcs, refs, table);
      std::ofstream base_out(dir / "baseline_bleu.txt", std::ios::binary);
      base_out << baseline.report();
    }
  });
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const fs::path& out_dir) {
  fs::create_directories(out_dir);
  DirLock lock(out_dir / ".lock");

  Runner r{cfg, out_dir, {}, false, {}, {}};
  const fs::path manifest_path = out_dir / "manifest.txt";
  if (fs::exists(manifest_path)) {
    r.prev = RunManifest::load(manifest_path);
    r.have_prev = true;
  }
  {
    std::string canon;
    for (const auto& [k, v] : cfg.entries) canon += k + " = " + v + "\n";
    r.cur.config_hash = sha256_hex(canon);
  }

  run_pipeline_stage(r);
  run_tokenize_stage(r);
  run_bpe_stage(r);
  run_embed_stage(r);
  run_train_stage(r);
  run_eval_stage(r);

  r.cur.created_unix = std::to_string(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  r.cur.save(manifest_path);

  ExperimentResult result;
  result.manifest = r.cur;
  result.out_dir = out_dir;
  result.stage_statuses = r.statuses;
  return result;
}

}  // namespace canto
