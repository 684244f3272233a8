// canto-umt: unified CLI over the pipeline, tokenizers, BPE, embeddings,
// UMT training, translation, evaluation and the experiment runner.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "canto/bleu.hpp"
#include "canto/bpe.hpp"
#include "canto/config.hpp"
#include "canto/corpus.hpp"
#include "canto/embedding.hpp"
#include "canto/experiment.hpp"
#include "canto/mapping.hpp"
#include "canto/skipgram.hpp"
#include "canto/trainer.hpp"
#include "canto/translate.hpp"

namespace fs = std::filesystem;
using namespace canto;

// Exit codes: 0 ok, 1 usage/config error, 2 I/O error, 3 data/validation error.
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitData = 3;

std::vector<std::string> read_lines_or_die(const fs::path& path) {
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

std::vector<Sentence> read_sentences(const fs::path& path) {
  std::vector<Sentence> out;
  for (auto& l : read_lines_or_die(path))
    out.push_back({std::move(l), path.string(), LanguageLabel::Ambiguous});
  return out;
}

std::vector<std::vector<std::string>> read_token_lines(const fs::path& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines_or_die(path)) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    out.push_back(std::move(toks));
  }
  return out;
}

// Minimal glob: '*' wildcards in the filename component only.
std::vector<fs::path> expand_glob(const std::string& pattern) {
  fs::path p(pattern);
  std::string name = p.filename().string();
  if (name.find('*') == std::string::npos) return {p};
  fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  auto matches = [&](const std::string& candidate) {
    // Greedy segment match over '*' pieces.
    std::size_t pos = 0;
    std::size_t start = 0;
    bool anchored = true;
    while (start < name.size()) {
      auto star = name.find('*', start);
      std::string piece = name.substr(start, star - start);
      if (!piece.empty()) {
        auto found = anchored ? (candidate.compare(pos, piece.size(), piece) == 0
                                     ? pos
                                     : std::string::npos)
                              : candidate.find(piece, pos);
        if (found == std::string::npos) return false;
        pos = found + piece.size();
      }
      if (star == std::string::npos) return pos == candidate.size();
      anchored = false;
      start = star + 1;
    }
    return true;  // pattern ends with '*'
  };
  std::vector<fs::path> out;
  if (fs::exists(dir))
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && matches(entry.path().filename().string()))
        out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

TokenScheme scheme_from(const std::string& s) {
  if (s == "char") return TokenScheme::Char;
  if (s == "word") return TokenScheme::Word;
  if (s == "bpe") return TokenScheme::Bpe;
  throw std::runtime_error("unknown scheme " + s);
}

std::vector<std::vector<int>> encode_all(
    const std::vector<std::vector<std::string>>& sents, const Vocabulary& v) {
  std::vector<std::vector<int>> out;
  out.reserve(sents.size());
  for (const auto& s : sents) out.push_back(v.encode(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mandarin-Cantonese unsupervised machine translation workbench"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string out_dir_s = ".";
  app.add_option("--seed", seed, "global random seed")
      ->envname("CANTO_UMT_SEED");
  app.add_option("--out-dir", out_dir_s, "output directory")
      ->envname("CANTO_UMT_OUT_DIR");

  // ---- pipeline run ----
  auto* pipeline = app.add_subcommand("pipeline", "corpus cleaning pipeline");
  auto* pipeline_run = pipeline->add_subcommand("run", "run the pipeline");
  std::string pl_config, pl_in;
  pipeline_run->add_option("--config", pl_config, "experiment config (optional)");
  pipeline_run->add_option("--in", pl_in, "input glob")->required();

  // ---- tokenize ----
  auto* tokenize_cmd = app.add_subcommand("tokenize", "tokenize text");
  std::string tok_scheme = "char", tok_lexicon, tok_in, tok_out;
  tokenize_cmd->add_option("--scheme", tok_scheme, "char|word")
      ->check(CLI::IsMember({"char", "word"}));
  tokenize_cmd->add_option("--lexicon", tok_lexicon, "lexicon file (word scheme)");
  tokenize_cmd->add_option("--in", tok_in, "input file (default stdin)");
  tokenize_cmd->add_option("--out", tok_out, "output file (default stdout)");

  // ---- bpe ----
  auto* bpe_cmd = app.add_subcommand("bpe", "byte-pair encoding");
  auto* bpe_learn = bpe_cmd->add_subcommand("learn", "learn merges");
  std::vector<std::string> bpe_inputs;
  std::string bpe_merges_out, bpe_mode = "joint";
  std::uint64_t bpe_num_merges = 50000;
  bpe_learn->add_option("--in", bpe_inputs, "word-tokenized corpora (1 or 2)")
      ->required()
      ->expected(1, 2);
  bpe_learn->add_option("--merges-out", bpe_merges_out, "output path or prefix")
      ->required();
  bpe_learn->add_option("--num-merges", bpe_num_merges, "merge budget");
  bpe_learn->add_option("--mode", bpe_mode, "joint|separate")
      ->check(CLI::IsMember({"joint", "separate"}));
  auto* bpe_apply = bpe_cmd->add_subcommand("apply", "apply merges");
  std::string bpe_merges, bpe_in, bpe_out;
  bpe_apply->add_option("--merges", bpe_merges, "merges file")->required();
  bpe_apply->add_option("--in", bpe_in, "word-tokenized input (default stdin)");
  bpe_apply->add_option("--out", bpe_out, "output file (default stdout)");

  // ---- embed ----
  auto* embed_cmd = app.add_subcommand("embed", "embedding training/alignment");
  auto* embed_train = embed_cmd->add_subcommand("train", "skip-gram training");
  std::vector<std::string> emb_inputs;
  std::string emb_out;
  int emb_dim = 512, emb_window = 5, emb_negatives = 5, emb_epochs = 5;
  double emb_lr = 0.025;
  embed_train->add_option("--in", emb_inputs, "tokenized corpora (concatenated)")
      ->required();
  embed_train->add_option("--out", emb_out, "output .vec path")->required();
  embed_train->add_option("--dim", emb_dim);
  embed_train->add_option("--window", emb_window);
  embed_train->add_option("--negatives", emb_negatives);
  embed_train->add_option("--epochs", emb_epochs);
  embed_train->add_option("--lr", emb_lr);

  auto* embed_map = embed_cmd->add_subcommand("map", "orthogonal mapping");
  std::string map_src, map_tgt, map_out_src, map_out_tgt, map_anchors = "identical";
  int map_self_learning = 0;
  embed_map->add_option("--src", map_src, "source embeddings")->required();
  embed_map->add_option("--tgt", map_tgt, "target embeddings")->required();
  embed_map->add_option("--anchors", map_anchors, "anchor mode (identical)")
      ->check(CLI::IsMember({"identical"}));
  embed_map->add_option("--self-learning", map_self_learning, "iterations");
  embed_map->add_option("--out-src", map_out_src, "mapped source output")
      ->required();
  embed_map->add_option("--out-tgt", map_out_tgt, "normalized target output")
      ->required();

  auto* embed_pivot = embed_cmd->add_subcommand("pivot-private",
                                                "compose pivot-private");
  std::string pv_shared, pv_priv1, pv_priv2, pv_out1, pv_out2;
  embed_pivot->add_option("--shared", pv_shared, "shared 256-dim embeddings")
      ->required();
  embed_pivot->add_option("--private-l1", pv_priv1)->required();
  embed_pivot->add_option("--private-l2", pv_priv2)->required();
  embed_pivot->add_option("--out-l1", pv_out1)->required();
  embed_pivot->add_option("--out-l2", pv_out2)->required();

  // ---- umt ----
  auto* umt = app.add_subcommand("umt", "unsupervised MT training");
  auto* umt_train = umt->add_subcommand("train", "train from scratch");
  std::string umt_config, umt_l1, umt_l2, umt_out;
  umt_train->add_option("--config", umt_config, "experiment config")->required();
  umt_train->add_option("--l1", umt_l1, "tokenized L1 corpus")->required();
  umt_train->add_option("--l2", umt_l2, "tokenized L2 corpus")->required();
  umt_train->add_option("--out", umt_out, "output directory")->required();
  auto* umt_resume = umt->add_subcommand("resume", "resume from checkpoint");
  std::string resume_ckpt;
  umt_resume->add_option("--checkpoint", resume_ckpt)->required();

  // ---- translate ----
  auto* translate_cmd = app.add_subcommand("translate", "translate sentences");
  std::string tr_model, tr_src_lang = "L1", tr_in, tr_out, tr_lexicon;
  int tr_beam = 1, tr_max_len = 0;
  translate_cmd->add_option("--model", tr_model, "checkpoint")->required();
  translate_cmd->add_option("--src-lang", tr_src_lang, "L1|L2")
      ->check(CLI::IsMember({"L1", "L2"}));
  translate_cmd->add_option("--beam", tr_beam, "beam size");
  translate_cmd->add_option("--max-len", tr_max_len, "generation cap");
  translate_cmd->add_option("--lexicon", tr_lexicon, "lexicon (word/bpe scheme)");
  translate_cmd->add_option("--in", tr_in, "input file (default stdin)");
  translate_cmd->add_option("--out", tr_out, "output file (default stdout)");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluation");
  auto* eval_bleu = eval_cmd->add_subcommand("bleu", "character BLEU");
  std::string eb_hyp, eb_ref;
  bool eb_strip_punct = false;
  eval_bleu->add_option("--hyp", eb_hyp)->required();
  eval_bleu->add_option("--ref", eb_ref)->required();
  eval_bleu->add_flag("--strip-punct", eb_strip_punct,
                      "drop punctuation tokens (non-default)");
  auto* eval_baseline = eval_cmd->add_subcommand(
      "baseline", "character-conversion baseline");
  std::string base_src, base_ref, base_table;
  eval_baseline->add_option("--src", base_src)->required();
  eval_baseline->add_option("--ref", base_ref)->required();
  eval_baseline->add_option("--table", base_table)->required();

  // ---- experiment ----
  auto* exp_cmd = app.add_subcommand("experiment", "experiment runner");
  auto* exp_run = exp_cmd->add_subcommand("run", "run all stages with caching");
  std::string exp_config;
  exp_run->add_option("--config", exp_config, "experiment config")->required()
      ->envname("CANTO_UMT_CONFIG");

  CLI11_PARSE(app, argc, argv);
  const fs::path out_dir(out_dir_s);

  try {
    if (pipeline_run->parsed()) {
      PipelineConfig pc;
      pc.inputs = expand_glob(pl_in);
      if (pc.inputs.empty()) {
        std::cerr << "pipeline: no inputs match " << pl_in << "\n";
        return kExitIo;
      }
      pc.out_dir = out_dir;
      PipelineResult res = run_pipeline(pc);
      std::cout << res.stats.report();
      return kExitOk;
    }

    if (tokenize_cmd->parsed()) {
      Lexicon lex;
      if (!tok_lexicon.empty()) lex = Lexicon::load(tok_lexicon);
      std::istream* in = &std::cin;
      std::ifstream fin;
      if (!tok_in.empty()) {
        fin.open(tok_in, std::ios::binary);
        if (!fin) throw std::runtime_error("cannot read " + tok_in);
        in = &fin;
      }
      std::ostream* out = &std::cout;
      std::ofstream fout;
      if (!tok_out.empty()) {
        fout.open(tok_out, std::ios::binary);
        if (!fout) throw std::runtime_error("cannot write " + tok_out);
        out = &fout;
      }
      std::string line;
      while (std::getline(*in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        Sentence s{line, "stdin", LanguageLabel::Ambiguous};
        if (line.empty()) {
          *out << "\n";
          continue;
        }
        TokenizedSentence t = tok_scheme == "char" ? char_tokenize(s)
                                                   : word_tokenize(s, lex);
        *out << t.joined() << "\n";
      }
      return kExitOk;
    }

    if (bpe_learn->parsed()) {
      std::vector<WordCounts> corpora;
      for (const auto& p : bpe_inputs)
        corpora.push_back(count_words(read_token_lines(p)));
      BpeMode mode = bpe_mode == "joint" ? BpeMode::Joint : BpeMode::Separate;
      auto tables = learn_bpe(corpora, bpe_num_merges, mode);
      if (tables.size() == 1) {
        tables[0].save(bpe_merges_out);
      } else {
        tables[0].save(bpe_merges_out + ".l1");
        tables[1].save(bpe_merges_out + ".l2");
      }
      return kExitOk;
    }

    if (bpe_apply->parsed()) {
      BpeApplier applier(MergeTable::load(bpe_merges));
      std::istream* in = &std::cin;
      std::ifstream fin;
      if (!bpe_in.empty()) {
        fin.open(bpe_in, std::ios::binary);
        if (!fin) throw std::runtime_error("cannot read " + bpe_in);
        in = &fin;
      }
      std::ostream* out = &std::cout;
      std::ofstream fout;
      if (!bpe_out.empty()) {
        fout.open(bpe_out, std::ios::binary);
        if (!fout) throw std::runtime_error("cannot write " + bpe_out);
        out = &fout;
      }
      std::string line;
      while (std::getline(*in, line)) {
        TokenizedSentence words;
        words.scheme = TokenScheme::Word;
        std::istringstream is(line);
        std::string t;
        while (is >> t) words.tokens.push_back(t);
        *out << applier.apply(words).joined() << "\n";
      }
      return kExitOk;
    }

    if (embed_train->parsed()) {
      std::vector<std::vector<std::string>> sents;
      for (const auto& p : emb_inputs) {
        auto part = read_token_lines(p);
        sents.insert(sents.end(), part.begin(), part.end());
      }
      SkipgramConfig sc;
      sc.dim = emb_dim;
      sc.window = emb_window;
      sc.negatives = emb_negatives;
      sc.epochs = emb_epochs;
      sc.lr = emb_lr;
      sc.seed = seed;
      SkipgramReport report;
      EmbeddingMatrix emb = SkipgramTrainer::from_sentences(sents, sc).train(&report);
      emb.save(emb_out);
      for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e)
        std::cout << "epoch " << (e + 1) << "\tmean_loss "
                  << report.epoch_mean_loss[e] << "\n";
      return kExitOk;
    }

    if (embed_map->parsed()) {
      EmbeddingMatrix x = EmbeddingMatrix::load(map_src);
      EmbeddingMatrix y = EmbeddingMatrix::load(map_tgt);
      AnchorDictionary anchors = build_anchor_dict(x.vocab, y.vocab);
      MappingReport report;
      MappingMatrix w = learn_mapping(x, y, anchors, map_self_learning, &report);
      if (report.few_anchors_warning)
        std::cerr << "warning: fewer anchors (" << report.anchors_used
                  << ") than dimensions\n";
      apply_mapping(x, w).save(map_out_src);
      EmbeddingMatrix yn;
      yn.vocab = y.vocab;
      yn.vectors = normalize_rows(y.vectors);
      yn.save(map_out_tgt);
      std::cout << "anchors\t" << report.anchors_used << "\n"
                << "orthogonality_error\t" << w.orthogonality_error() << "\n";
      return kExitOk;
    }

    if (embed_pivot->parsed()) {
      PivotPrivatePair pair = compose_pivot_private(
          EmbeddingMatrix::load(pv_shared), EmbeddingMatrix::load(pv_priv1),
          EmbeddingMatrix::load(pv_priv2));
      pair.l1.embedding.save(pv_out1);
      pair.l2.embedding.save(pv_out2);
      std::cout << "l1_missing_shared\t" << pair.l1.missing_shared << "\n"
                << "l2_missing_shared\t" << pair.l2.missing_shared << "\n";
      return kExitOk;
    }

    if (umt_train->parsed()) {
      ExperimentConfig cfg = validate_config(umt_config);
      for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
      auto l1 = read_token_lines(umt_l1);
      auto l2 = read_token_lines(umt_l2);
      Vocabulary v1 = Vocabulary::build(l1);
      Vocabulary v2 = Vocabulary::build(l2);
      Seq2SeqModel model(cfg.model, std::move(v1), std::move(v2), cfg.seed);
      Trainer trainer(model, encode_all(l1, model.vocab(Lang::L1)),
                      encode_all(l2, model.vocab(Lang::L2)), cfg.train);
      std::map<std::string, std::string> extra;
      extra["corpus_l1_path"] = umt_l1;
      extra["corpus_l2_path"] = umt_l2;
      trainer.train(umt_out, extra);
      std::cout << "trained " << trainer.step() << " steps\n";
      return kExitOk;
    }

    if (umt_resume->parsed()) {
      Checkpoint ck = Checkpoint::load(resume_ckpt);
      LoadedModel lm = load_model(ck);
      TrainingSchedule sched;
      {
        // The schedule canonical form round-trips through the flat parser.
        auto kv = parse_flat_kv(ck.manifest_at("schedule"));
        sched.steps = std::stoull(kv.at("steps"));
        sched.batch_size = std::stoi(kv.at("batch_size"));
        sched.dae_ratio = std::stoi(kv.at("dae_ratio"));
        sched.bt_ratio = std::stoi(kv.at("bt_ratio"));
        sched.warmup_frac = std::stod(kv.at("warmup_frac"));
        sched.lr = std::stod(kv.at("lr"));
        sched.adagrad_eps = std::stod(kv.at("adagrad_eps"));
        sched.grad_clip = std::stod(kv.at("grad_clip"));
        sched.p_drop = std::stod(kv.at("p_drop"));
        sched.shuffle_k = std::stoi(kv.at("shuffle_k"));
        sched.checkpoint_every = std::stoull(kv.at("checkpoint_every"));
        sched.seed = std::stoull(kv.at("seed"));
        sched.gen_max_len = std::stoi(kv.at("gen_max_len"));
      }
      const std::string l1_path = ck.manifest_at("corpus_l1_path");
      const std::string l2_path = ck.manifest_at("corpus_l2_path");
      auto l1 = read_token_lines(l1_path);
      auto l2 = read_token_lines(l2_path);
      Trainer trainer(*lm.model, encode_all(l1, lm.model->vocab(Lang::L1)),
                      encode_all(l2, lm.model->vocab(Lang::L2)), sched);
      trainer.restore(ck);
      std::map<std::string, std::string> extra;
      extra["corpus_l1_path"] = l1_path;
      extra["corpus_l2_path"] = l2_path;
      if (ck.manifest.count("bpe_merges"))
        extra["bpe_merges"] = ck.manifest.at("bpe_merges");
      trainer.train(fs::path(resume_ckpt).parent_path(), extra);
      std::cout << "resumed to step " << trainer.step() << "\n";
      return kExitOk;
    }

    if (translate_cmd->parsed()) {
      Checkpoint ck = Checkpoint::load(tr_model);
      LoadedModel lm = load_model(ck);
      Lexicon lex;
      if (!tr_lexicon.empty()) lex = Lexicon::load(tr_lexicon);
      std::optional<BpeApplier> bpe;
      if (lm.model->config().scheme == TokenScheme::Bpe) {
        if (!ck.manifest.count("bpe_merges"))
          throw std::runtime_error("checkpoint lacks bpe merges");
        std::istringstream is(ck.manifest.at("bpe_merges"));
        // Reuse the file parser via a temp path-free route: parse manually.
        std::string header;
        std::getline(is, header);
        MergeTable table;
        std::string line;
        while (std::getline(is, line)) {
          if (line.empty()) continue;
          auto sp = line.find(' ');
          table.merges.push_back({line.substr(0, sp), line.substr(sp + 1)});
        }
        bpe.emplace(std::move(table));
      }
      TokenizerContext tok;
      tok.scheme = lm.model->config().scheme;
      tok.lexicon = &lex;
      if (bpe) tok.bpe = &*bpe;
      Lang src = tr_src_lang == "L1" ? Lang::L1 : Lang::L2;
      int cap = tr_max_len > 0 ? tr_max_len : lm.model->config().max_len;

      std::istream* in = &std::cin;
      std::ifstream fin;
      if (!tr_in.empty()) {
        fin.open(tr_in, std::ios::binary);
        if (!fin) throw std::runtime_error("cannot read " + tr_in);
        in = &fin;
      }
      std::ostream* out = &std::cout;
      std::ofstream fout;
      if (!tr_out.empty()) {
        fout.open(tr_out, std::ios::binary);
        if (!fout) throw std::runtime_error("cannot write " + tr_out);
        out = &fout;
      }
      std::string line;
      while (std::getline(*in, line)) {
        if (line.empty()) {
          *out << "\n";
          continue;
        }
        TranslationResult res = translate(
            *lm.model, Sentence{line, "stdin", LanguageLabel::Ambiguous}, src,
            tok, tr_beam, cap);
        *out << res.sentence.text << "\n";
        if (res.contains_unk)
          std::cerr << "note: <UNK> in output for input: " << line << "\n";
      }
      return kExitOk;
    }

    if (eval_bleu->parsed()) {
      BleuReport report = char_bleu(read_sentences(eb_hyp),
                                    read_sentences(eb_ref), eb_strip_punct);
      std::cout << report.report();
      return kExitOk;
    }

    if (eval_baseline->parsed()) {
      BleuReport report =
          baseline_evaluate(read_sentences(base_src), read_sentences(base_ref),
                            ConversionTable::load(base_table));
      std::cout << report.report();
      return kExitOk;
    }

    if (exp_run->parsed()) {
      ExperimentConfig cfg = validate_config(exp_config);
      for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
      ExperimentResult res = run_experiment(cfg, out_dir);
      for (const auto& s : res.stage_statuses) std::cout << s << "\n";
      std::cout << "manifest: " << (res.out_dir / "manifest.txt").string() << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
