#include "canto/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "canto/hash.hpp"

namespace canto {

using ad::Mat;
using ad::Var;

std::string_view to_string(ModelVariant v) {
  return v == ModelVariant::Gru ? "gru" : "transformer";
}

ModelVariant model_variant_from_string(const std::string& s) {
  if (s == "gru") return ModelVariant::Gru;
  if (s == "transformer") return ModelVariant::Transformer;
  throw std::invalid_argument("unknown model variant: " + s);
}

void ModelConfig::validate() const {
  if (d_model < 2) throw std::invalid_argument("model: d_model too small");
  if (max_len < 1) throw std::invalid_argument("model: max_len must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("model: dropout must be in [0, 1)");
  if (variant == ModelVariant::Gru) {
    if (d_model % 2 != 0)
      throw std::invalid_argument("model: gru d_model must be even");
    if (enc_layers != 2 || dec_layers != 2)
      throw std::invalid_argument("model: gru variant is 2-layer");
  } else {
    if (heads < 1 || d_model % heads != 0)
      throw std::invalid_argument("model: d_model must divide into heads");
    if (ffn_dim < 1) throw std::invalid_argument("model: ffn_dim must be >= 1");
    if (enc_layers != 4 || dec_layers != 4)
      throw std::invalid_argument("model: transformer variant is 4-layer");
    if (shared_decoder_layers < 0 || shared_decoder_layers > dec_layers)
      throw std::invalid_argument("model: shared_decoder_layers out of range");
  }
}

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os << "variant=" << to_string(variant) << "\n"
     << "scheme=" << (scheme == TokenScheme::Char ? "char"
                      : scheme == TokenScheme::Word ? "word" : "bpe") << "\n"
     << "d_model=" << d_model << "\n"
     << "heads=" << heads << "\n"
     << "ffn_dim=" << ffn_dim << "\n"
     << "enc_layers=" << enc_layers << "\n"
     << "dec_layers=" << dec_layers << "\n"
     << "shared_decoder_layers=" << shared_decoder_layers << "\n"
     << "dropout=" << dropout << "\n"
     << "max_len=" << max_len << "\n"
     << "freeze_embeddings=" << (freeze_embeddings ? 1 : 0) << "\n";
  return os.str();
}

std::string ModelConfig::content_hash() const { return sha256_hex(canonical()); }

ModelConfig gru_paper_config() {
  ModelConfig c;
  c.variant = ModelVariant::Gru;
  c.d_model = 512;
  c.enc_layers = 2;
  c.dec_layers = 2;
  c.freeze_embeddings = true;
  return c;
}

ModelConfig transformer_paper_config() {
  ModelConfig c;
  c.variant = ModelVariant::Transformer;
  c.d_model = 512;
  c.heads = 8;
  c.ffn_dim = 2048;
  c.enc_layers = 4;
  c.dec_layers = 4;
  c.shared_decoder_layers = 3;
  c.freeze_embeddings = false;
  return c;
}

Parameter& ParamStore::create(const std::string& name, Mat init, bool frozen) {
  if (map_.count(name)) throw std::logic_error("duplicate parameter " + name);
  order_.push_back(name);
  Parameter& p = map_[name];
  p.value = std::move(init);
  p.frozen = frozen;
  return p;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = map_.find(name);
  if (it == map_.end()) throw std::logic_error("unknown parameter " + name);
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = map_.find(name);
  if (it == map_.end()) throw std::logic_error("unknown parameter " + name);
  return it->second;
}

bool ParamStore::has(const std::string& name) const { return map_.count(name) > 0; }

Graph::Graph(ad::Tape& tape, ParamStore& params, bool train, double dropout,
             std::mt19937_64* rng)
    : tape_(tape), params_(params), train_(train), dropout_(dropout), rng_(rng) {}

Var Graph::p(const std::string& name) {
  auto it = bound_index_.find(name);
  if (it != bound_index_.end()) return bound_[it->second].second;
  Parameter& param = params_.at(name);
  Var v = ad::leaf_ref(tape_, &param.value, !param.frozen);
  bound_index_[name] = bound_.size();
  bound_.push_back({name, v});
  return v;
}

Var Graph::drop(Var x) {
  if (!train_ || dropout_ <= 0.0) return x;
  if (!rng_) throw std::logic_error("dropout requires an rng in train mode");
  return ad::dropout(x, dropout_, *rng_);
}

void Graph::for_each_bound(
    const std::function<void(const std::string&, const Var&)>& fn) const {
  for (const auto& [name, var] : bound_) fn(name, var);
}

AttentionResult attend(const Eigen::RowVectorXd& query,
                       const ad::Mat& encoder_states, const ad::Mat& wa) {
  Eigen::RowVectorXd scores = (query * wa) * encoder_states.transpose();
  double m = scores.maxCoeff();
  Eigen::RowVectorXd w = (scores.array() - m).exp();
  w /= w.sum();
  AttentionResult out;
  out.weights = w;
  out.context = w * encoder_states;
  return out;
}

namespace {

Mat uniform_mat(std::mt19937_64& rng, long r, long c, double a) {
  std::uniform_real_distribution<double> dist(-a, a);
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

Mat normal_mat(std::mt19937_64& rng, long r, long c, double std) {
  std::normal_distribution<double> dist(0.0, std);
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

std::string lang_key(Lang lang) { return std::string(to_string(lang)); }

}  // namespace

Seq2SeqModel::Seq2SeqModel(ModelConfig cfg, Vocabulary vocab_l1,
                           Vocabulary vocab_l2, std::uint64_t seed)
    : cfg_(cfg), vocab_l1_(std::move(vocab_l1)), vocab_l2_(std::move(vocab_l2)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  if (cfg_.variant == ModelVariant::Gru)
    init_gru(rng);
  else
    init_transformer(rng);
}

void Seq2SeqModel::init_gru(std::mt19937_64& rng) {
  const int d = cfg_.d_model;
  const int h = d / 2;  // per direction in the bidirectional encoder
  const double a = 0.1;

  params_.create("emb.L1", uniform_mat(rng, vocab_l1_.size(), d, a),
                 cfg_.freeze_embeddings);
  params_.create("emb.L2", uniform_mat(rng, vocab_l2_.size(), d, a),
                 cfg_.freeze_embeddings);

  auto create_cell = [&](const std::string& prefix, int in_dim, int hidden) {
    for (const char* gate : {"z", "r", "n"}) {
      params_.create(prefix + "w" + gate, uniform_mat(rng, in_dim, hidden, a));
      params_.create(prefix + "u" + gate, uniform_mat(rng, hidden, hidden, a));
      params_.create(prefix + "b" + gate, Mat::Zero(1, hidden));
    }
  };

  for (int l = 0; l < cfg_.enc_layers; ++l) {
    std::string base = "enc.l" + std::to_string(l) + ".";
    create_cell(base + "fw.", d, h);
    create_cell(base + "bw.", d, h);
  }

  for (Lang lang : {Lang::L1, Lang::L2}) {
    const std::string lk = lang_key(lang);
    for (int l = 0; l < cfg_.dec_layers; ++l)
      create_cell("dec." + lk + ".l" + std::to_string(l) + ".", d, d);
    params_.create("dec." + lk + ".attn.wa", uniform_mat(rng, d, d, a));
    params_.create("dec." + lk + ".attn.wc", uniform_mat(rng, 2 * d, d, a));
    params_.create("dec." + lk + ".attn.bc", Mat::Zero(1, d));
    const int v = vocab(lang).size();
    params_.create("dec." + lk + ".out.w", uniform_mat(rng, v, d, a));
    params_.create("dec." + lk + ".out.b", Mat::Zero(1, v));
  }
}

void Seq2SeqModel::init_transformer(std::mt19937_64& rng) {
  const int d = cfg_.d_model;
  const double std = 0.02;

  params_.create("emb.L1", normal_mat(rng, vocab_l1_.size(), d, std),
                 cfg_.freeze_embeddings);
  params_.create("emb.L2", normal_mat(rng, vocab_l2_.size(), d, std),
                 cfg_.freeze_embeddings);
  params_.create("out_bias.L1", Mat::Zero(1, vocab_l1_.size()));
  params_.create("out_bias.L2", Mat::Zero(1, vocab_l2_.size()));

  auto create_ln = [&](const std::string& name) {
    params_.create(name + ".g", Mat::Ones(1, d));
    params_.create(name + ".b", Mat::Zero(1, d));
  };
  auto create_attn = [&](const std::string& prefix) {
    for (const char* w : {"wq", "wk", "wv", "wo"})
      params_.create(prefix + w, normal_mat(rng, d, d, std));
    for (const char* b : {"bq", "bk", "bv", "bo"})
      params_.create(prefix + b, Mat::Zero(1, d));
  };
  auto create_ffn = [&](const std::string& prefix) {
    params_.create(prefix + "w1", normal_mat(rng, d, cfg_.ffn_dim, std));
    params_.create(prefix + "b1", Mat::Zero(1, cfg_.ffn_dim));
    params_.create(prefix + "w2", normal_mat(rng, cfg_.ffn_dim, d, std));
    params_.create(prefix + "b2", Mat::Zero(1, d));
  };

  for (int l = 0; l < cfg_.enc_layers; ++l) {
    std::string base = "enc.l" + std::to_string(l) + ".";
    create_ln(base + "ln1");
    create_attn(base + "attn.");
    create_ln(base + "ln2");
    create_ffn(base + "ffn.");
  }
  create_ln("enc.ln");

  // Shared decoder layers exist once; private layers once per language.
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    std::vector<std::string> bases;
    if (is_decoder_layer_shared(l)) {
      bases.push_back("dec.shared.l" + std::to_string(l) + ".");
    } else {
      bases.push_back("dec.L1.l" + std::to_string(l) + ".");
      bases.push_back("dec.L2.l" + std::to_string(l) + ".");
    }
    for (const auto& base : bases) {
      create_ln(base + "ln1");
      create_attn(base + "attn.");
      create_ln(base + "ln2");
      create_attn(base + "xattn.");
      create_ln(base + "ln3");
      create_ffn(base + "ffn.");
    }
  }
  create_ln("dec.ln");
}

bool Seq2SeqModel::is_decoder_layer_shared(int layer) const {
  if (cfg_.variant != ModelVariant::Transformer) return false;
  return layer < cfg_.shared_decoder_layers;
}

std::string Seq2SeqModel::decoder_layer_prefix(Lang lang, int layer) const {
  if (is_decoder_layer_shared(layer))
    return "dec.shared.l" + std::to_string(layer) + ".";
  return "dec." + lang_key(lang) + ".l" + std::to_string(layer) + ".";
}

std::size_t Seq2SeqModel::set_embeddings(Lang lang, const EmbeddingMatrix& emb) {
  if (emb.dim() != cfg_.d_model)
    throw std::invalid_argument("set_embeddings: dimension mismatch");
  Parameter& p = params_.at("emb." + lang_key(lang));
  const Vocabulary& v = vocab(lang);
  std::size_t missing = 0;
  for (int i = 0; i < v.size(); ++i) {
    const std::string& tok = v.token(i);
    if (emb.vocab.contains(tok)) {
      p.value.row(i) = emb.vectors.row(emb.vocab.id(tok));
    } else {
      ++missing;
    }
  }
  return missing;
}

std::string Seq2SeqModel::embedding_hash(Lang lang) const {
  const Mat& m = params_.at("emb." + lang_key(lang)).value;
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(m.data()),
                                     sizeof(double) * m.size()));
}

Var Seq2SeqModel::embed(Graph& g, const std::vector<int>& ids, Lang lang) const {
  return ad::gather_rows(g.p("emb." + lang_key(lang)), ids);
}

Var Seq2SeqModel::gru_cell(Graph& g, const std::string& prefix, Var x,
                           Var h_prev) const {
  Var z = ad::sigmoid(ad::add_rowvec(
      ad::add(ad::matmul(x, g.p(prefix + "wz")), ad::matmul(h_prev, g.p(prefix + "uz"))),
      g.p(prefix + "bz")));
  Var r = ad::sigmoid(ad::add_rowvec(
      ad::add(ad::matmul(x, g.p(prefix + "wr")), ad::matmul(h_prev, g.p(prefix + "ur"))),
      g.p(prefix + "br")));
  Var n = ad::tanh_(ad::add_rowvec(
      ad::add(ad::matmul(x, g.p(prefix + "wn")),
              ad::matmul(ad::mul(r, h_prev), g.p(prefix + "un"))),
      g.p(prefix + "bn")));
  // h = z*h_prev + (1-z)*n
  Var one = ad::constant(g.tape(), Mat::Ones(1, n.cols()));
  return ad::add(ad::mul(z, h_prev), ad::mul(ad::sub(one, z), n));
}

Var Seq2SeqModel::gru_bidi_layer(Graph& g, const std::string& prefix,
                                 Var seq) const {
  const int s = static_cast<int>(seq.rows());
  const int h = cfg_.d_model / 2;
  Var h0 = ad::constant(g.tape(), Mat::Zero(1, h));

  std::vector<Var> fw(s), bw(s);
  Var hf = h0;
  for (int t = 0; t < s; ++t) {
    hf = gru_cell(g, prefix + "fw.", ad::slice_rows(seq, t, 1), hf);
    fw[t] = hf;
  }
  Var hb = h0;
  for (int t = s - 1; t >= 0; --t) {
    hb = gru_cell(g, prefix + "bw.", ad::slice_rows(seq, t, 1), hb);
    bw[t] = hb;
  }
  std::vector<Var> rows(s);
  for (int t = 0; t < s; ++t) rows[t] = ad::concat_cols({fw[t], bw[t]});
  return ad::stack_rows(rows);
}

Var Seq2SeqModel::gru_encode(Graph& g, Var emb) const {
  Var x = g.drop(emb);
  for (int l = 0; l < cfg_.enc_layers; ++l)
    x = gru_bidi_layer(g, "enc.l" + std::to_string(l) + ".", x);
  return x;
}

ad::Mat Seq2SeqModel::positional_encoding(int len) const {
  const int d = cfg_.d_model;
  Mat pe(len, d);
  for (int pos = 0; pos < len; ++pos) {
    for (int i = 0; i < d; i += 2) {
      double angle = pos / std::pow(10000.0, static_cast<double>(i) / d);
      pe(pos, i) = std::sin(angle);
      if (i + 1 < d) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Var Seq2SeqModel::mha(Graph& g, const std::string& prefix, Var queries, Var keys,
                      Var values, const ad::Mat* mask) const {
  const int d = cfg_.d_model;
  const int nh = cfg_.heads;
  const int dh = d / nh;
  Var q = ad::add_rowvec(ad::matmul(queries, g.p(prefix + "wq")), g.p(prefix + "bq"));
  Var k = ad::add_rowvec(ad::matmul(keys, g.p(prefix + "wk")), g.p(prefix + "bk"));
  Var v = ad::add_rowvec(ad::matmul(values, g.p(prefix + "wv")), g.p(prefix + "bv"));

  std::vector<Var> heads;
  heads.reserve(nh);
  for (int hh = 0; hh < nh; ++hh) {
    Var qh = ad::slice_cols(q, hh * dh, dh);
    Var kh = ad::slice_cols(k, hh * dh, dh);
    Var vh = ad::slice_cols(v, hh * dh, dh);
    Var scores = ad::scale(ad::matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh)));
    if (mask) scores = ad::add(scores, ad::constant(g.tape(), *mask));
    Var attn = ad::softmax_rows(scores);
    heads.push_back(ad::matmul(attn, vh));
  }
  Var ctx = nh == 1 ? heads[0] : ad::concat_cols(heads);
  return ad::add_rowvec(ad::matmul(ctx, g.p(prefix + "wo")), g.p(prefix + "bo"));
}

Var Seq2SeqModel::transformer_ffn(Graph& g, const std::string& prefix,
                                  Var x) const {
  Var h = ad::relu(ad::add_rowvec(ad::matmul(x, g.p(prefix + "w1")),
                                  g.p(prefix + "b1")));
  return ad::add_rowvec(ad::matmul(h, g.p(prefix + "w2")), g.p(prefix + "b2"));
}

namespace {

ad::Mat causal_mask(int n) {
  ad::Mat m = ad::Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = -1e9;
  return m;
}

}  // namespace

Var Seq2SeqModel::transformer_encode(Graph& g, Var emb) const {
  const int s = static_cast<int>(emb.rows());
  Var pe = ad::constant(g.tape(), positional_encoding(s));
  Var x = g.drop(ad::add(ad::scale(emb, std::sqrt(double(cfg_.d_model))), pe));
  for (int l = 0; l < cfg_.enc_layers; ++l) {
    std::string base = "enc.l" + std::to_string(l) + ".";
    Var normed = ad::layernorm_rows(x, g.p(base + "ln1.g"), g.p(base + "ln1.b"));
    x = ad::add(x, g.drop(mha(g, base + "attn.", normed, normed, normed, nullptr)));
    Var normed2 = ad::layernorm_rows(x, g.p(base + "ln2.g"), g.p(base + "ln2.b"));
    x = ad::add(x, g.drop(transformer_ffn(g, base + "ffn.", normed2)));
  }
  return ad::layernorm_rows(x, g.p("enc.ln.g"), g.p("enc.ln.b"));
}

Var Seq2SeqModel::transformer_decoder_stack(Graph& g, Var x, Var enc, Lang lang,
                                            bool causal) const {
  const int t = static_cast<int>(x.rows());
  ad::Mat mask;
  if (causal) mask = causal_mask(t);
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    std::string base = decoder_layer_prefix(lang, l);
    Var n1 = ad::layernorm_rows(x, g.p(base + "ln1.g"), g.p(base + "ln1.b"));
    x = ad::add(x, g.drop(mha(g, base + "attn.", n1, n1, n1,
                              causal ? &mask : nullptr)));
    Var n2 = ad::layernorm_rows(x, g.p(base + "ln2.g"), g.p(base + "ln2.b"));
    x = ad::add(x, g.drop(mha(g, base + "xattn.", n2, enc, enc, nullptr)));
    Var n3 = ad::layernorm_rows(x, g.p(base + "ln3.g"), g.p(base + "ln3.b"));
    x = ad::add(x, g.drop(transformer_ffn(g, base + "ffn.", n3)));
  }
  return ad::layernorm_rows(x, g.p("dec.ln.g"), g.p("dec.ln.b"));
}

Var Seq2SeqModel::encode(Graph& g, const std::vector<int>& src_ids,
                         Lang src_lang) const {
  if (src_ids.empty()) throw std::invalid_argument("encode: empty input");
  if (static_cast<int>(src_ids.size()) > cfg_.max_len)
    throw std::invalid_argument("encode: sequence longer than max_len");
  Var emb = embed(g, src_ids, src_lang);
  return cfg_.variant == ModelVariant::Gru ? gru_encode(g, emb)
                                           : transformer_encode(g, emb);
}

Var Seq2SeqModel::output_logits(Graph& g, Var features, Lang lang) const {
  const std::string lk = lang_key(lang);
  if (cfg_.variant == ModelVariant::Gru) {
    return ad::add_rowvec(ad::matmul_nt(features, g.p("dec." + lk + ".out.w")),
                          g.p("dec." + lk + ".out.b"));
  }
  // Transformer output projection is tied to the embedding table.
  return ad::add_rowvec(ad::matmul_nt(features, g.p("emb." + lk)),
                        g.p("out_bias." + lk));
}

Var Seq2SeqModel::gru_decoder_feature(Graph& g, Var emb_row,
                                      std::vector<Var>& hidden, Var enc_states,
                                      Lang lang) const {
  const std::string lk = lang_key(lang);
  Var x = emb_row;
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    hidden[l] = gru_cell(g, "dec." + lk + ".l" + std::to_string(l) + ".", x,
                         hidden[l]);
    x = hidden[l];
  }
  // Luong "general" attention over the encoder states.
  Var scores = ad::matmul_nt(ad::matmul(x, g.p("dec." + lk + ".attn.wa")),
                             enc_states);
  Var weights = ad::softmax_rows(scores);
  Var context = ad::matmul(weights, enc_states);
  Var combined = ad::concat_cols({context, x});
  return ad::tanh_(ad::add_rowvec(
      ad::matmul(combined, g.p("dec." + lk + ".attn.wc")),
      g.p("dec." + lk + ".attn.bc")));
}

Var Seq2SeqModel::decode_teacher_logits(Graph& g, Var enc_states,
                                        const std::vector<int>& tgt_in,
                                        Lang tgt_lang) const {
  if (cfg_.variant == ModelVariant::Gru) {
    Var emb = g.drop(embed(g, tgt_in, tgt_lang));
    std::vector<Var> hidden(cfg_.dec_layers,
                            ad::constant(g.tape(), Mat::Zero(1, cfg_.d_model)));
    std::vector<Var> features;
    features.reserve(tgt_in.size());
    for (std::size_t t = 0; t < tgt_in.size(); ++t) {
      features.push_back(gru_decoder_feature(
          g, ad::slice_rows(emb, static_cast<int>(t), 1), hidden, enc_states,
          tgt_lang));
    }
    return output_logits(g, ad::stack_rows(features), tgt_lang);
  }
  Var emb = embed(g, tgt_in, tgt_lang);
  Var pe = ad::constant(g.tape(),
                        positional_encoding(static_cast<int>(tgt_in.size())));
  Var x = g.drop(ad::add(ad::scale(emb, std::sqrt(double(cfg_.d_model))), pe));
  Var out = transformer_decoder_stack(g, x, enc_states, tgt_lang, true);
  return output_logits(g, out, tgt_lang);
}

std::pair<Var, int> Seq2SeqModel::sequence_nll(Graph& g,
                                               const std::vector<int>& src_ids,
                                               Lang src_lang,
                                               const std::vector<int>& tgt_ids,
                                               Lang tgt_lang) const {
  if (static_cast<int>(tgt_ids.size()) + 1 > cfg_.max_len + 1)
    throw std::invalid_argument("sequence_nll: target longer than max_len");
  Var enc = encode(g, src_ids, src_lang);
  std::vector<int> tgt_in;
  tgt_in.reserve(tgt_ids.size() + 1);
  tgt_in.push_back(vocab(tgt_lang).bos(tgt_lang));
  tgt_in.insert(tgt_in.end(), tgt_ids.begin(), tgt_ids.end());
  std::vector<int> targets = tgt_ids;
  targets.push_back(Vocabulary::kEos);
  Var logits = decode_teacher_logits(g, enc, tgt_in, tgt_lang);
  return {ad::cross_entropy_sum(logits, targets),
          static_cast<int>(targets.size())};
}

// --- inference ---

ad::Mat Seq2SeqModel::encode_inference(const std::vector<int>& src_ids,
                                       Lang src_lang) const {
  ad::Tape tape(false);
  Graph g(tape, const_cast<ParamStore&>(params_));
  return encode(g, src_ids, src_lang).val();
}

DecoderState Seq2SeqModel::start_state(Lang tgt_lang) const {
  DecoderState st;
  st.lang = tgt_lang;
  if (cfg_.variant == ModelVariant::Gru)
    st.gru_hidden.assign(cfg_.dec_layers, Mat::Zero(1, cfg_.d_model));
  return st;
}

Eigen::RowVectorXd Seq2SeqModel::decode_step(int prev_token, DecoderState& state,
                                             const ad::Mat& enc_states) const {
  ad::Tape tape(false);
  Graph g(tape, const_cast<ParamStore&>(params_));
  Var enc = ad::leaf_ref(tape, &enc_states, false);

  if (cfg_.variant == ModelVariant::Gru) {
    std::vector<Var> hidden;
    hidden.reserve(state.gru_hidden.size());
    for (const Mat& h : state.gru_hidden)
      hidden.push_back(ad::leaf(tape, h, false));
    Var feature = gru_decoder_feature(g, embed(g, {prev_token}, state.lang),
                                      hidden, enc, state.lang);
    Var logits = output_logits(g, feature, state.lang);
    for (std::size_t l = 0; l < hidden.size(); ++l)
      state.gru_hidden[l] = hidden[l].val();
    return logits.val().row(0);
  }

  state.prefix.push_back(prev_token);
  Var emb = embed(g, state.prefix, state.lang);
  Var pe = ad::constant(tape,
                        positional_encoding(static_cast<int>(state.prefix.size())));
  Var x = ad::add(ad::scale(emb, std::sqrt(double(cfg_.d_model))), pe);
  Var out = transformer_decoder_stack(g, x, enc, state.lang, true);
  Var logits = output_logits(
      g, ad::slice_rows(out, static_cast<int>(state.prefix.size()) - 1, 1),
      state.lang);
  return logits.val().row(0);
}

}  // namespace canto
