// Inference: greedy and beam decoding over a trained model, plus the
// tokenize/detokenize plumbing that turns sentences into model ids.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "canto/bpe.hpp"
#include "canto/model.hpp"
#include "canto/segmentation.hpp"
#include "canto/text.hpp"
#include "canto/vocab.hpp"

namespace canto {

struct Hypothesis {
  std::vector<int> tokens;  // generated ids, no BOS/EOS
  double log_prob = 0.0;
  bool finished = false;
};

// Generated ids until EOS or max_len. PAD and both BOS ids are suppressed.
std::vector<int> greedy_decode(const Seq2SeqModel& model,
                               const std::vector<int>& src_ids, Lang src_lang,
                               Lang tgt_lang, int max_len);

struct BeamOptions {
  int beam_size = 1;
  int max_len = 100;
  double length_norm_power = 0.6;  // score / len^power
};

// Length-normalized beam search. The greedy rollout is always among the
// candidates, so the returned score never falls below the greedy score.
Hypothesis beam_decode(const Seq2SeqModel& model, const std::vector<int>& src_ids,
                       Lang src_lang, Lang tgt_lang, const BeamOptions& opts);

double normalized_score(const Hypothesis& h, double length_norm_power);

// Scheme-aware tokenization for inference input/output.
struct TokenizerContext {
  TokenScheme scheme = TokenScheme::Char;
  const Lexicon* lexicon = nullptr;      // word / bpe schemes
  const BpeApplier* bpe = nullptr;       // bpe scheme

  TokenizedSentence tokenize(const Sentence& s) const;
};

struct TranslationResult {
  Sentence sentence;
  bool contains_unk = false;  // OOV-only handling is flagged, not fatal
  double score = 0.0;
};

TranslationResult translate(const Seq2SeqModel& model, const Sentence& input,
                            Lang src_lang, const TokenizerContext& tok,
                            int beam_size, int max_len);

}  // namespace canto
