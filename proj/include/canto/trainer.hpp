// The unsupervised training regime: denoising autoencoding interleaved with
// on-the-fly back-translation over one shared-encoder/dual-decoder model.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "canto/checkpoint.hpp"
#include "canto/model.hpp"
#include "canto/vocab.hpp"

namespace canto {

enum class TrainTask { Dae, Bt };

std::string_view to_string(TrainTask task);

struct TrainingSchedule {
  std::uint64_t steps = 1000;
  int batch_size = 8;
  int dae_ratio = 1;  // task mix DAE:BT over each ratio-sum window
  int bt_ratio = 1;
  double warmup_frac = 0.1;  // leading fraction of steps runs DAE only
  double lr = 0.1;
  double adagrad_eps = 1e-8;
  double grad_clip = 5.0;
  double p_drop = 0.1;
  int shuffle_k = 3;
  std::uint64_t checkpoint_every = 1000;
  std::uint64_t seed = 42;
  int gen_max_len = 0;  // back-translation generation cap; 0 = model max_len

  void validate() const;
  std::string canonical() const;
  std::string content_hash() const;
};

struct StepRecord {
  std::uint64_t step;
  TrainTask task;
  Lang lang;
  double loss;
};

class Trainer {
 public:
  // Corpora are token-id sentences in the model's vocabularies. Sentences
  // that are empty or too long for max_len are dropped up front.
  Trainer(Seq2SeqModel& model, std::vector<std::vector<int>> corpus_l1,
          std::vector<std::vector<int>> corpus_l2, TrainingSchedule schedule);

  // One optimizer step each; both return the batch mean-token loss.
  double dae_step(Lang lang);
  double backtranslation_step(Lang src_lang);

  // Runs from the current step to schedule.steps, appending metric lines
  // ("step<TAB>task<TAB>lang<TAB>loss") and writing checkpoints on cadence.
  void train(const std::filesystem::path& out_dir,
             const std::map<std::string, std::string>& extra_manifest = {});

  StepRecord step_once();
  std::pair<TrainTask, Lang> task_for_step(std::uint64_t step) const;
  std::uint64_t warmup_steps() const;

  std::uint64_t step() const { return step_; }
  std::uint64_t bt_pairs_skipped() const { return bt_pairs_skipped_; }
  const TrainingSchedule& schedule() const { return sched_; }

  Checkpoint make_checkpoint(
      const std::map<std::string, std::string>& extra_manifest = {}) const;
  void save_checkpoint(const std::filesystem::path& path,
                       const std::map<std::string, std::string>& extra = {}) const;
  // Restores parameters, optimizer state, counters and the rng stream.
  // Throws on config/vocab/schedule hash mismatch.
  void restore(const Checkpoint& ck);

 private:
  std::vector<const std::vector<int>*> next_batch(Lang lang);
  const std::vector<std::vector<int>>& corpus(Lang lang) const {
    return lang == Lang::L1 ? corpus_l1_ : corpus_l2_;
  }
  void apply_gradients(Graph& g);
  std::string batch_hash(const std::vector<const std::vector<int>*>& batch) const;
  void ensure_epoch_order(Lang lang, std::uint64_t epoch);

  Seq2SeqModel& model_;
  std::vector<std::vector<int>> corpus_l1_, corpus_l2_;
  TrainingSchedule sched_;
  std::mt19937_64 rng_;  // noise + dropout stream, serialized on checkpoint
  std::uint64_t step_ = 0;
  std::uint64_t pos_l1_ = 0, pos_l2_ = 0;  // sentences consumed per language
  std::uint64_t bt_pairs_skipped_ = 0;
  // Cached per-epoch shuffles (pure functions of seed/lang/epoch).
  std::vector<std::size_t> order_l1_, order_l2_;
  std::uint64_t order_epoch_l1_ = ~0ull, order_epoch_l2_ = ~0ull;
};

// Reconstructs a model (config, vocabularies, parameters) from a checkpoint.
struct LoadedModel {
  std::unique_ptr<Seq2SeqModel> model;
  TrainingSchedule schedule;
  std::map<std::string, std::string> manifest;
};
LoadedModel load_model(const Checkpoint& ck);

ModelConfig model_config_from_canonical(const std::string& text);
Vocabulary vocabulary_from_serialized(const std::string& text);

}  // namespace canto
