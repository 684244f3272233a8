// Shared-encoder / dual-decoder sequence models: a 2-layer bidirectional GRU
// with Luong attention, and a 4-layer transformer whose two decoders share
// three of their four layers. Both variants run on the autodiff tape, so
// training gradients are exact.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "canto/autodiff.hpp"
#include "canto/embedding.hpp"
#include "canto/segmentation.hpp"
#include "canto/vocab.hpp"

namespace canto {

enum class ModelVariant { Gru, Transformer };

std::string_view to_string(ModelVariant v);
ModelVariant model_variant_from_string(const std::string& s);

struct ModelConfig {
  ModelVariant variant = ModelVariant::Transformer;
  TokenScheme scheme = TokenScheme::Char;
  int d_model = 512;
  int heads = 8;        // transformer
  int ffn_dim = 2048;   // transformer
  int enc_layers = 4;   // 2 for the GRU variant
  int dec_layers = 4;
  int shared_decoder_layers = 3;  // transformer decoders alias these layers
  double dropout = 0.0;
  int max_len = 100;
  bool freeze_embeddings = false;  // the GRU configuration trains with true

  void validate() const;
  std::string canonical() const;
  std::string content_hash() const;
};

ModelConfig gru_paper_config();
ModelConfig transformer_paper_config();

struct Parameter {
  ad::Mat value;
  ad::Mat opt_state;  // optimizer accumulator, sized on first update
  bool frozen = false;
};

class ParamStore {
 public:
  Parameter& create(const std::string& name, ad::Mat init, bool frozen = false);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Parameter> map_;
};

// Binds parameters into one tape as leaves (cached per name) and carries the
// training-mode bits the forward builders need.
class Graph {
 public:
  Graph(ad::Tape& tape, ParamStore& params, bool train = false,
        double dropout = 0.0, std::mt19937_64* rng = nullptr);

  ad::Var p(const std::string& name);
  ad::Var drop(ad::Var x);  // inverted dropout in train mode, identity otherwise
  ad::Tape& tape() { return tape_; }
  bool train() const { return train_; }

  void for_each_bound(
      const std::function<void(const std::string&, const ad::Var&)>& fn) const;

 private:
  ad::Tape& tape_;
  ParamStore& params_;
  bool train_;
  double dropout_;
  std::mt19937_64* rng_;
  std::vector<std::pair<std::string, ad::Var>> bound_;
  std::unordered_map<std::string, std::size_t> bound_index_;
};

struct DecoderState {
  Lang lang = Lang::L1;
  std::vector<ad::Mat> gru_hidden;  // per layer, 1 x d_model
  std::vector<int> prefix;          // transformer: tokens fed so far (with BOS)
};

// Luong "general" bilinear attention over plain matrices; the in-graph path
// uses the same formula through tape ops.
struct AttentionResult {
  Eigen::RowVectorXd context;
  Eigen::RowVectorXd weights;  // nonnegative, sums to 1
};
AttentionResult attend(const Eigen::RowVectorXd& query,
                       const ad::Mat& encoder_states, const ad::Mat& wa);

class Seq2SeqModel {
 public:
  Seq2SeqModel(ModelConfig cfg, Vocabulary vocab_l1, Vocabulary vocab_l2,
               std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab(Lang lang) const {
    return lang == Lang::L1 ? vocab_l1_ : vocab_l2_;
  }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Copies rows for tokens present in `emb` into the language's embedding
  // table; returns how many vocabulary tokens were missing from `emb`.
  std::size_t set_embeddings(Lang lang, const EmbeddingMatrix& emb);

  // --- graph builders (training and inference share these paths) ---

  // Encoder states (seq_len x d_model). The encoder is language-agnostic:
  // `lang` only selects the embedding table. Throws on seq_len > max_len.
  ad::Var encode(Graph& g, const std::vector<int>& src_ids, Lang src_lang) const;

  // Teacher-forced decoder logits (len(tgt_in) x target vocab size).
  ad::Var decode_teacher_logits(Graph& g, ad::Var enc_states,
                                const std::vector<int>& tgt_in,
                                Lang tgt_lang) const;

  // Sum of token NLLs for src -> tgt with BOS/EOS handling inside; the
  // returned pair is (loss_sum node, number of target tokens).
  std::pair<ad::Var, int> sequence_nll(Graph& g, const std::vector<int>& src_ids,
                                       Lang src_lang,
                                       const std::vector<int>& tgt_ids,
                                       Lang tgt_lang) const;

  // --- inference (no-grad tapes inside) ---

  ad::Mat encode_inference(const std::vector<int>& src_ids, Lang src_lang) const;
  DecoderState start_state(Lang tgt_lang) const;
  // Feeds `prev_token` (BOS on the first call), returns the next-token logits.
  Eigen::RowVectorXd decode_step(int prev_token, DecoderState& state,
                                 const ad::Mat& enc_states) const;

  bool is_decoder_layer_shared(int layer) const;
  // Prefix such as "dec.shared.l1." or "dec.L2.l3."; shared layers yield the
  // same prefix for both languages.
  std::string decoder_layer_prefix(Lang lang, int layer) const;

  std::string embedding_hash(Lang lang) const;

 private:
  void init_gru(std::mt19937_64& rng);
  void init_transformer(std::mt19937_64& rng);

  ad::Var embed(Graph& g, const std::vector<int>& ids, Lang lang) const;
  ad::Var gru_cell(Graph& g, const std::string& prefix, ad::Var x,
                   ad::Var h_prev) const;
  ad::Var gru_bidi_layer(Graph& g, const std::string& prefix, ad::Var seq) const;
  ad::Var gru_encode(Graph& g, ad::Var emb) const;
  ad::Var transformer_encode(Graph& g, ad::Var emb) const;
  ad::Var mha(Graph& g, const std::string& prefix, ad::Var queries, ad::Var keys,
              ad::Var values, const ad::Mat* mask) const;
  ad::Var transformer_ffn(Graph& g, const std::string& prefix, ad::Var x) const;
  ad::Var transformer_decoder_stack(Graph& g, ad::Var x, ad::Var enc,
                                    Lang lang, bool causal) const;
  // One GRU decoder step; returns the pre-projection feature (1 x d_model).
  ad::Var gru_decoder_feature(Graph& g, ad::Var emb_row, std::vector<ad::Var>& hidden,
                              ad::Var enc_states, Lang lang) const;
  ad::Var output_logits(Graph& g, ad::Var features, Lang lang) const;
  ad::Mat positional_encoding(int len) const;

  ModelConfig cfg_;
  Vocabulary vocab_l1_, vocab_l2_;
  ParamStore params_;
};

}  // namespace canto
