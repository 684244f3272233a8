#include "canto/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "canto/hash.hpp"
#include "canto/noise.hpp"
#include "canto/translate.hpp"

namespace canto {

std::string_view to_string(TrainTask task) {
  return task == TrainTask::Dae ? "dae" : "bt";
}

void TrainingSchedule::validate() const {
  if (batch_size < 1) throw std::invalid_argument("schedule: batch_size >= 1");
  if (dae_ratio < 1 || bt_ratio < 0)
    throw std::invalid_argument("schedule: ratio components must be positive");
  if (warmup_frac < 0.0 || warmup_frac > 1.0)
    throw std::invalid_argument("schedule: warmup_frac in [0, 1]");
  if (lr <= 0.0) throw std::invalid_argument("schedule: lr must be > 0");
  if (p_drop < 0.0 || p_drop >= 1.0)
    throw std::invalid_argument("schedule: p_drop in [0, 1)");
  if (shuffle_k < 0) throw std::invalid_argument("schedule: shuffle_k >= 0");
}

std::string TrainingSchedule::canonical() const {
  std::ostringstream os;
  os << "steps=" << steps << "\nbatch_size=" << batch_size
     << "\ndae_ratio=" << dae_ratio << "\nbt_ratio=" << bt_ratio
     << "\nwarmup_frac=" << warmup_frac << "\nlr=" << lr
     << "\nadagrad_eps=" << adagrad_eps << "\ngrad_clip=" << grad_clip
     << "\np_drop=" << p_drop << "\nshuffle_k=" << shuffle_k
     << "\ncheckpoint_every=" << checkpoint_every << "\nseed=" << seed
     << "\ngen_max_len=" << gen_max_len << "\noptimizer=adagrad\n";
  return os.str();
}

std::string TrainingSchedule::content_hash() const {
  return sha256_hex(canonical());
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<std::vector<int>> filter_corpus(std::vector<std::vector<int>> corpus,
                                            int max_len) {
  std::vector<std::vector<int>> out;
  out.reserve(corpus.size());
  for (auto& s : corpus)
    if (!s.empty() && static_cast<int>(s.size()) <= max_len - 1)
      out.push_back(std::move(s));
  return out;
}

std::string corpus_hash(const std::vector<std::vector<int>>& corpus) {
  Sha256 h;
  for (const auto& s : corpus) {
    h.update(s.data(), s.size() * sizeof(int));
    const char sep = '\n';
    h.update(&sep, 1);
  }
  return h.hex_digest();
}

std::string format_loss(double loss) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", loss);
  return buf;
}

}  // namespace

Trainer::Trainer(Seq2SeqModel& model, std::vector<std::vector<int>> corpus_l1,
                 std::vector<std::vector<int>> corpus_l2,
                 TrainingSchedule schedule)
    : model_(model),
      corpus_l1_(filter_corpus(std::move(corpus_l1), model.config().max_len)),
      corpus_l2_(filter_corpus(std::move(corpus_l2), model.config().max_len)),
      sched_(schedule),
      rng_(mix_seed(schedule.seed, 0)) {
  sched_.validate();
  if (corpus_l1_.empty() || corpus_l2_.empty())
    throw std::invalid_argument("trainer: empty corpus after length filtering");
}

std::uint64_t Trainer::warmup_steps() const {
  return static_cast<std::uint64_t>(
      std::floor(sched_.warmup_frac * static_cast<double>(sched_.steps)));
}

std::pair<TrainTask, Lang> Trainer::task_for_step(std::uint64_t step) const {
  const std::uint64_t warmup = warmup_steps();
  if (step < warmup || sched_.bt_ratio == 0) {
    return {TrainTask::Dae, step % 2 == 0 ? Lang::L1 : Lang::L2};
  }
  const std::uint64_t s = step - warmup;
  const std::uint64_t period =
      static_cast<std::uint64_t>(sched_.dae_ratio + sched_.bt_ratio);
  const std::uint64_t r = s % period;
  if (r < static_cast<std::uint64_t>(sched_.dae_ratio)) {
    const std::uint64_t nth = warmup + (s / period) * sched_.dae_ratio + r;
    return {TrainTask::Dae, nth % 2 == 0 ? Lang::L1 : Lang::L2};
  }
  const std::uint64_t nth =
      (s / period) * sched_.bt_ratio + (r - sched_.dae_ratio);
  return {TrainTask::Bt, nth % 2 == 0 ? Lang::L1 : Lang::L2};
}

void Trainer::ensure_epoch_order(Lang lang, std::uint64_t epoch) {
  auto& order = lang == Lang::L1 ? order_l1_ : order_l2_;
  auto& cached = lang == Lang::L1 ? order_epoch_l1_ : order_epoch_l2_;
  if (cached == epoch) return;
  const std::size_t n = corpus(lang).size();
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(
      mix_seed(sched_.seed, 1 + 2 * epoch + (lang == Lang::L1 ? 0 : 1)));
  std::shuffle(order.begin(), order.end(), rng);
  cached = epoch;
}

std::vector<const std::vector<int>*> Trainer::next_batch(Lang lang) {
  auto& pos = lang == Lang::L1 ? pos_l1_ : pos_l2_;
  const auto& corp = corpus(lang);
  std::vector<const std::vector<int>*> batch;
  batch.reserve(sched_.batch_size);
  for (int i = 0; i < sched_.batch_size; ++i) {
    const std::uint64_t epoch = pos / corp.size();
    ensure_epoch_order(lang, epoch);
    const auto& order = lang == Lang::L1 ? order_l1_ : order_l2_;
    batch.push_back(&corp[order[pos % corp.size()]]);
    ++pos;
  }
  return batch;
}

std::string Trainer::batch_hash(
    const std::vector<const std::vector<int>*>& batch) const {
  Sha256 h;
  for (const auto* s : batch) {
    h.update(s->data(), s->size() * sizeof(int));
    const char sep = '\n';
    h.update(&sep, 1);
  }
  return h.hex_digest();
}

void Trainer::apply_gradients(Graph& g) {
  // Global norm clip, then Adagrad.
  double sq = 0.0;
  g.for_each_bound([&](const std::string&, const ad::Var& v) {
    if (!v.requires_grad()) return;
    const ad::Mat* grad = v.tape()->grad_if_any(v.id());
    if (grad) sq += grad->squaredNorm();
  });
  const double norm = std::sqrt(sq);
  const double clip =
      (sched_.grad_clip > 0.0 && norm > sched_.grad_clip)
          ? sched_.grad_clip / norm
          : 1.0;

  g.for_each_bound([&](const std::string& name, const ad::Var& v) {
    if (!v.requires_grad()) return;
    const ad::Mat* grad = v.tape()->grad_if_any(v.id());
    if (!grad) return;
    Parameter& p = model_.params().at(name);
    if (p.frozen) return;
    if (p.opt_state.size() == 0)
      p.opt_state = ad::Mat::Zero(p.value.rows(), p.value.cols());
    ad::Mat scaled = *grad * clip;
    p.opt_state += scaled.cwiseProduct(scaled);
    p.value -= sched_.lr *
               scaled.cwiseQuotient(
                   (p.opt_state.cwiseSqrt().array() + sched_.adagrad_eps).matrix());
  });
}

double Trainer::dae_step(Lang lang) {
  auto batch = next_batch(lang);
  ad::Tape tape(true);
  Graph g(tape, model_.params(), true, model_.config().dropout, &rng_);

  ad::Var total;
  int tokens = 0;
  for (const auto* ids : batch) {
    std::vector<int> noisy =
        add_noise(*ids, sched_.p_drop, sched_.shuffle_k, rng_);
    auto [nll, n] = model_.sequence_nll(g, noisy, lang, *ids, lang);
    total = total.valid() ? ad::add(total, nll) : nll;
    tokens += n;
  }
  ad::Var loss = ad::scale(total, 1.0 / tokens);
  const double value = loss.val()(0, 0);
  if (!std::isfinite(value))
    throw std::runtime_error("dae_step: non-finite loss at step " +
                             std::to_string(step_) + ", batch " +
                             batch_hash(batch));
  tape.backward_from(loss.id());
  apply_gradients(g);
  return value;
}

double Trainer::backtranslation_step(Lang src_lang) {
  auto batch = next_batch(src_lang);
  const Lang tgt_lang = other(src_lang);
  const int gen_cap =
      sched_.gen_max_len > 0 ? sched_.gen_max_len : model_.config().max_len;

  // Inference pass: greedy, no gradients by construction.
  std::vector<std::pair<std::vector<int>, const std::vector<int>*>> pairs;
  for (const auto* ids : batch) {
    std::vector<int> synthetic =
        greedy_decode(model_, *ids, src_lang, tgt_lang, gen_cap);
    if (synthetic.empty()) {
      ++bt_pairs_skipped_;
      continue;
    }
    pairs.push_back({std::move(synthetic), ids});
  }
  if (pairs.empty()) return 0.0;

  ad::Tape tape(true);
  Graph g(tape, model_.params(), true, model_.config().dropout, &rng_);
  ad::Var total;
  int tokens = 0;
  for (const auto& [synthetic, original] : pairs) {
    auto [nll, n] =
        model_.sequence_nll(g, synthetic, tgt_lang, *original, src_lang);
    total = total.valid() ? ad::add(total, nll) : nll;
    tokens += n;
  }
  ad::Var loss = ad::scale(total, 1.0 / tokens);
  const double value = loss.val()(0, 0);
  if (!std::isfinite(value))
    throw std::runtime_error("backtranslation_step: non-finite loss at step " +
                             std::to_string(step_) + ", batch " +
                             batch_hash(batch));
  tape.backward_from(loss.id());
  apply_gradients(g);
  return value;
}

StepRecord Trainer::step_once() {
  auto [task, lang] = task_for_step(step_);
  double loss = task == TrainTask::Dae ? dae_step(lang)
                                       : backtranslation_step(lang);
  StepRecord rec{step_, task, lang, loss};
  ++step_;
  return rec;
}

void Trainer::train(const std::filesystem::path& out_dir,
                    const std::map<std::string, std::string>& extra_manifest) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path metrics_path = out_dir / "metrics.tsv";
  std::ofstream metrics(metrics_path,
                        step_ == 0 ? std::ios::binary
                                   : std::ios::binary | std::ios::app);
  if (!metrics)
    throw std::runtime_error("trainer: cannot write " + metrics_path.string());

  if (step_ == 0)
    save_checkpoint(out_dir / "checkpoint-0.cumt", extra_manifest);

  while (step_ < sched_.steps) {
    StepRecord rec = step_once();
    metrics << rec.step << "\t" << to_string(rec.task) << "\t"
            << to_string(rec.lang) << "\t" << format_loss(rec.loss) << "\n";
    if (sched_.checkpoint_every > 0 && step_ % sched_.checkpoint_every == 0 &&
        step_ < sched_.steps) {
      save_checkpoint(
          out_dir / ("checkpoint-" + std::to_string(step_) + ".cumt"),
          extra_manifest);
    }
  }
  metrics.flush();
  save_checkpoint(out_dir / "checkpoint-final.cumt", extra_manifest);
}

Checkpoint Trainer::make_checkpoint(
    const std::map<std::string, std::string>& extra_manifest) const {
  Checkpoint ck;
  ck.manifest = extra_manifest;
  ck.manifest["config"] = model_.config().canonical();
  ck.manifest["config_hash"] = model_.config().content_hash();
  ck.manifest["vocab.L1"] = model_.vocab(Lang::L1).serialized();
  ck.manifest["vocab.L2"] = model_.vocab(Lang::L2).serialized();
  ck.manifest["vocab_l1_hash"] = model_.vocab(Lang::L1).content_hash();
  ck.manifest["vocab_l2_hash"] = model_.vocab(Lang::L2).content_hash();
  ck.manifest["schedule"] = sched_.canonical();
  ck.manifest["schedule_hash"] = sched_.content_hash();
  ck.manifest["step"] = std::to_string(step_);
  ck.manifest["pos_l1"] = std::to_string(pos_l1_);
  ck.manifest["pos_l2"] = std::to_string(pos_l2_);
  ck.manifest["bt_pairs_skipped"] = std::to_string(bt_pairs_skipped_);
  ck.manifest["corpus_l1_hash"] = corpus_hash(corpus_l1_);
  ck.manifest["corpus_l2_hash"] = corpus_hash(corpus_l2_);
  {
    std::ostringstream os;
    os << rng_;
    ck.manifest["rng"] = os.str();
  }
  for (const auto& name : model_.params().names()) {
    const Parameter& p = model_.params().at(name);
    ck.tensors.push_back({name, p.value});
    if (p.opt_state.size() != 0) ck.tensors.push_back({"opt." + name, p.opt_state});
  }
  return ck;
}

void Trainer::save_checkpoint(
    const std::filesystem::path& path,
    const std::map<std::string, std::string>& extra) const {
  make_checkpoint(extra).save(path);
}

void Trainer::restore(const Checkpoint& ck) {
  if (ck.manifest_at("config_hash") != model_.config().content_hash())
    throw std::runtime_error("resume: config hash mismatch");
  if (ck.manifest_at("vocab_l1_hash") != model_.vocab(Lang::L1).content_hash() ||
      ck.manifest_at("vocab_l2_hash") != model_.vocab(Lang::L2).content_hash())
    throw std::runtime_error("resume: vocab hash mismatch");
  if (ck.manifest_at("schedule_hash") != sched_.content_hash())
    throw std::runtime_error("resume: schedule hash mismatch");
  if (ck.manifest_at("corpus_l1_hash") != corpus_hash(corpus_l1_) ||
      ck.manifest_at("corpus_l2_hash") != corpus_hash(corpus_l2_))
    throw std::runtime_error("resume: corpus hash mismatch");

  for (const auto& name : model_.params().names()) {
    Parameter& p = model_.params().at(name);
    const ad::Mat* value = ck.find_tensor(name);
    if (!value) throw std::runtime_error("resume: missing tensor " + name);
    if (value->rows() != p.value.rows() || value->cols() != p.value.cols())
      throw std::runtime_error("resume: tensor shape mismatch for " + name);
    p.value = *value;
    const ad::Mat* opt = ck.find_tensor("opt." + name);
    if (opt) p.opt_state = *opt;
  }
  step_ = std::stoull(ck.manifest_at("step"));
  pos_l1_ = std::stoull(ck.manifest_at("pos_l1"));
  pos_l2_ = std::stoull(ck.manifest_at("pos_l2"));
  bt_pairs_skipped_ = std::stoull(ck.manifest_at("bt_pairs_skipped"));
  std::istringstream is(ck.manifest_at("rng"));
  is >> rng_;
  if (!is) throw std::runtime_error("resume: bad rng state");
  order_epoch_l1_ = order_epoch_l2_ = ~0ull;
}

ModelConfig model_config_from_canonical(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("model config: malformed line " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "variant") cfg.variant = model_variant_from_string(value);
    else if (key == "scheme")
      cfg.scheme = value == "char"   ? TokenScheme::Char
                   : value == "word" ? TokenScheme::Word
                                     : TokenScheme::Bpe;
    else if (key == "d_model") cfg.d_model = std::stoi(value);
    else if (key == "heads") cfg.heads = std::stoi(value);
    else if (key == "ffn_dim") cfg.ffn_dim = std::stoi(value);
    else if (key == "enc_layers") cfg.enc_layers = std::stoi(value);
    else if (key == "dec_layers") cfg.dec_layers = std::stoi(value);
    else if (key == "shared_decoder_layers")
      cfg.shared_decoder_layers = std::stoi(value);
    else if (key == "dropout") cfg.dropout = std::stod(value);
    else if (key == "max_len") cfg.max_len = std::stoi(value);
    else if (key == "freeze_embeddings") cfg.freeze_embeddings = value == "1";
    else throw std::runtime_error("model config: unknown key " + key);
  }
  return cfg;
}

Vocabulary vocabulary_from_serialized(const std::string& text) {
  Vocabulary v;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("vocab: malformed serialized line");
    v.add(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
  }
  return v;
}

LoadedModel load_model(const Checkpoint& ck) {
  LoadedModel out;
  ModelConfig cfg = model_config_from_canonical(ck.manifest_at("config"));
  Vocabulary v1 = vocabulary_from_serialized(ck.manifest_at("vocab.L1"));
  Vocabulary v2 = vocabulary_from_serialized(ck.manifest_at("vocab.L2"));
  if (ck.manifest_at("vocab_l1_hash") != v1.content_hash() ||
      ck.manifest_at("vocab_l2_hash") != v2.content_hash())
    throw std::runtime_error("checkpoint: vocab hash mismatch");
  if (ck.manifest_at("config_hash") != cfg.content_hash())
    throw std::runtime_error("checkpoint: config hash mismatch");

  out.model = std::make_unique<Seq2SeqModel>(cfg, std::move(v1), std::move(v2),
                                             /*seed=*/0);
  for (const auto& name : out.model->params().names()) {
    Parameter& p = out.model->params().at(name);
    const ad::Mat* value = ck.find_tensor(name);
    if (!value) throw std::runtime_error("checkpoint: missing tensor " + name);
    if (value->rows() != p.value.rows() || value->cols() != p.value.cols())
      throw std::runtime_error("checkpoint: tensor shape mismatch for " + name);
    p.value = *value;
  }
  out.manifest = ck.manifest;
  return out;
}

}  // namespace canto
