#include "canto/translate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canto {

namespace {

void suppress_control(Eigen::RowVectorXd& logits) {
  logits(Vocabulary::kPad) = -1e30;
  logits(Vocabulary::kBosL1) = -1e30;
  logits(Vocabulary::kBosL2) = -1e30;
}

Eigen::RowVectorXd log_softmax(const Eigen::RowVectorXd& logits) {
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

}  // namespace

namespace {

Hypothesis greedy_hypothesis(const Seq2SeqModel& model, const ad::Mat& enc,
                             Lang tgt_lang, int max_len) {
  DecoderState state = model.start_state(tgt_lang);
  int prev = model.vocab(tgt_lang).bos(tgt_lang);
  Hypothesis hyp;
  for (int t = 0; t < max_len; ++t) {
    Eigen::RowVectorXd logits = model.decode_step(prev, state, enc);
    suppress_control(logits);
    Eigen::RowVectorXd logp = log_softmax(logits);
    int next;
    logp.maxCoeff(&next);
    hyp.log_prob += logp(next);
    if (next == Vocabulary::kEos) {
      hyp.finished = true;
      return hyp;
    }
    hyp.tokens.push_back(next);
    prev = next;
  }
  hyp.finished = true;  // length-capped
  return hyp;
}

}  // namespace

std::vector<int> greedy_decode(const Seq2SeqModel& model,
                               const std::vector<int>& src_ids, Lang src_lang,
                               Lang tgt_lang, int max_len) {
  ad::Mat enc = model.encode_inference(src_ids, src_lang);
  return greedy_hypothesis(model, enc, tgt_lang, max_len).tokens;
}

double normalized_score(const Hypothesis& h, double length_norm_power) {
  double len = std::max<std::size_t>(h.tokens.size(), 1);
  return h.log_prob / std::pow(len, length_norm_power);
}

Hypothesis beam_decode(const Seq2SeqModel& model, const std::vector<int>& src_ids,
                       Lang src_lang, Lang tgt_lang, const BeamOptions& opts) {
  if (opts.beam_size < 1)
    throw std::invalid_argument("beam_decode: beam_size must be >= 1");

  ad::Mat enc = model.encode_inference(src_ids, src_lang);
  const int bos = model.vocab(tgt_lang).bos(tgt_lang);

  struct Beam {
    Hypothesis hyp;
    DecoderState state;
    int prev;
  };
  std::vector<Beam> beams;
  beams.push_back({Hypothesis{}, model.start_state(tgt_lang), bos});

  std::optional<Hypothesis> best_finished;
  auto consider_finished = [&](const Hypothesis& h) {
    if (!best_finished || normalized_score(h, opts.length_norm_power) >
                              normalized_score(*best_finished,
                                               opts.length_norm_power))
      best_finished = h;
  };
  // Seed with the greedy rollout so the result never scores below it.
  consider_finished(greedy_hypothesis(model, enc, tgt_lang, opts.max_len));

  for (int t = 0; t < opts.max_len && !beams.empty(); ++t) {
    struct Candidate {
      std::size_t beam_index;
      int token;
      double log_prob;
    };
    std::vector<Candidate> candidates;
    std::vector<Eigen::RowVectorXd> logps(beams.size());
    for (std::size_t b = 0; b < beams.size(); ++b) {
      Eigen::RowVectorXd logits = model.decode_step(beams[b].prev,
                                                    beams[b].state, enc);
      suppress_control(logits);
      logps[b] = log_softmax(logits);
      for (int v = 0; v < logps[b].size(); ++v)
        candidates.push_back({b, v, beams[b].hyp.log_prob + logps[b](v)});
    }
    std::size_t keep = std::min<std::size_t>(
        static_cast<std::size_t>(opts.beam_size) * 2, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.beam_index != b.beam_index)
                          return a.beam_index < b.beam_index;
                        return a.token < b.token;
                      });

    std::vector<Beam> next;
    for (std::size_t c = 0; c < keep && next.size() <
                                            static_cast<std::size_t>(opts.beam_size);
         ++c) {
      const Candidate& cand = candidates[c];
      Hypothesis h = beams[cand.beam_index].hyp;
      h.log_prob = cand.log_prob;
      if (cand.token == Vocabulary::kEos) {
        h.finished = true;
        consider_finished(h);
        continue;
      }
      h.tokens.push_back(cand.token);
      Beam nb;
      nb.hyp = std::move(h);
      nb.state = beams[cand.beam_index].state;  // copy; prefix diverges here
      nb.prev = cand.token;
      next.push_back(std::move(nb));
    }
    beams = std::move(next);
  }

  for (Beam& b : beams) {
    b.hyp.finished = true;  // length-capped
    consider_finished(b.hyp);
  }
  return *best_finished;
}

TokenizedSentence TokenizerContext::tokenize(const Sentence& s) const {
  switch (scheme) {
    case TokenScheme::Char:
      return char_tokenize(s);
    case TokenScheme::Word: {
      if (!lexicon) throw std::invalid_argument("tokenize: word scheme needs a lexicon");
      return word_tokenize(s, *lexicon);
    }
    case TokenScheme::Bpe: {
      if (!lexicon || !bpe)
        throw std::invalid_argument("tokenize: bpe scheme needs lexicon and merges");
      return bpe->apply(word_tokenize(s, *lexicon));
    }
  }
  throw std::logic_error("tokenize: unknown scheme");
}

TranslationResult translate(const Seq2SeqModel& model, const Sentence& input,
                            Lang src_lang, const TokenizerContext& tok,
                            int beam_size, int max_len) {
  if (beam_size < 1) throw std::invalid_argument("translate: beam_size >= 1");
  TokenizedSentence toks = tok.tokenize(input);
  if (toks.tokens.empty())
    throw std::invalid_argument("translate: empty input after tokenization");
  const Vocabulary& src_vocab = model.vocab(src_lang);
  std::vector<int> ids = src_vocab.encode(toks.tokens);

  const Lang tgt_lang = other(src_lang);
  Hypothesis hyp;
  if (beam_size == 1) {
    hyp.tokens = greedy_decode(model, ids, src_lang, tgt_lang, max_len);
    hyp.finished = true;
  } else {
    BeamOptions opts;
    opts.beam_size = beam_size;
    opts.max_len = max_len;
    // The greedy rollout is a candidate too, so beam never scores below it.
    hyp = beam_decode(model, ids, src_lang, tgt_lang, opts);
  }

  TranslationResult result;
  const Vocabulary& tgt_vocab = model.vocab(tgt_lang);
  TokenizedSentence out_tokens;
  out_tokens.scheme = model.config().scheme;
  for (int id : hyp.tokens) {
    out_tokens.tokens.push_back(tgt_vocab.token(id));
    if (id == Vocabulary::kUnk) result.contains_unk = true;
  }
  Sentence detok;
  if (out_tokens.scheme == TokenScheme::Bpe) {
    // A length-capped hypothesis may end mid-word; patch the marker so the
    // text is still recoverable.
    try {
      detok = detokenize(out_tokens);
    } catch (const std::invalid_argument&) {
      out_tokens.tokens.back() += std::string(kSubwordEndMarker);
      detok = detokenize(out_tokens);
    }
  } else {
    detok = detokenize(out_tokens);
  }
  result.sentence = detok;
  result.sentence.source_id = input.source_id;
  result.score = hyp.log_prob;
  return result;
}

}  // namespace canto
