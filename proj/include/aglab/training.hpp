#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aglab/evaluation.hpp"
#include "aglab/neural.hpp"

namespace aglab {

struct TrainConfig {
  Task task = Task::VerbNumber;
  /// Recorded in the manifest; the caller applies them to the data.
  std::vector<Ablation> ablations;
  std::size_t max_updates = 20'000;
  std::size_t eval_every = 2'000;
  /// Non-improving evaluations tolerated before stopping.
  std::size_t patience = 5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;
  ModelVariant variant = ModelVariant::Bidirectional;
  int embed = 150;
  int hidden = 150;
  int head_hidden = 128;
  unsigned workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
  /// Keys may be omitted; unknown keys raise ConfigError.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct Evaluation {
  std::uint64_t step = 0;
  double dev_metric = 0.0;
  /// Mean training loss since the previous evaluation.
  double train_loss = 0.0;
  bool operator==(const Evaluation&) const = default;
};

struct RunManifest {
  nlohmann::json config;
  std::uint64_t corpus_hash = 0;
  std::uint64_t vocab_hash = 0;
  std::vector<Evaluation> evaluations;
  std::uint64_t best_step = 0;
  std::string best_checkpoint;
  std::uint64_t updates = 0;
  /// "max_updates", "patience" or "diverged".
  std::string stop_reason;
  std::optional<std::uint64_t> diverged_at;
  std::string divergence_message;
  double wall_clock_seconds = 0.0;

  nlohmann::json to_json(bool include_wall_clock = true) const;
  /// (step, metric, value) rows.
  std::string metrics_tsv() const;
};

struct TrainResult {
  Checkpoint best;
  RunManifest manifest;
  bool diverged() const { return manifest.diverged_at.has_value(); }
};

/// Dev selection metric of a model: mean per-role accuracy for the verb
/// task, macro-F1 over the five suffix classes for the suffix task.
double selection_metric(const Model& model, const WordIndex& words, const EncodedSet& dev,
                        unsigned workers = 1);

/// Length-bucketed batches for one epoch: shuffle, sort pools of
/// 50 batches by length, cut, shuffle batch order.
std::vector<std::vector<std::size_t>> epoch_batches(const EncodedSet& set,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed);

/// Trains from a fresh initialization derived from config.seed. Evaluates
/// on dev every eval_every updates and at the end; keeps the best dev model.
/// A non-finite loss or gradient stops training with diverged_at set.
TrainResult train(const TrainConfig& config, const Vocab& vocab, const WordIndex& words,
                  const EncodedSet& train_set, const EncodedSet& dev_set,
                  std::uint64_t corpus_hash = 0);

/// Per-role argmax with the Sg < Pl < None tie order.
std::vector<AgreementTriple> predict_verb(const Model& model, const WordIndex& words,
                                          const EncodedSet& set, unsigned workers = 1);
/// Per-token argmax with the A < Ak < Ek < Ari < Ei < None tie order;
/// ineligible positions are predicted too.
std::vector<std::vector<NuclearSuffix>> predict_suffix(const Model& model, const WordIndex& words,
                                                       const EncodedSet& set,
                                                       unsigned workers = 1);

/// Checkpoint-level entry points; refuse a checkpoint trained on another
/// vocabulary.
std::vector<AgreementTriple> predict_verb(const Checkpoint& checkpoint, const Vocab& vocab,
                                          std::span<const VerbTaskInstance> instances,
                                          unsigned workers = 1);
std::vector<std::vector<NuclearSuffix>> predict_suffix(const Checkpoint& checkpoint,
                                                       const Vocab& vocab,
                                                       std::span<const SuffixTaskInstance> instances,
                                                       unsigned workers = 1);

/// Index of the first maximum.
int argmax_first(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Hash of the corpus JSONL serialization.
std::uint64_t corpus_hash(std::span<const Sentence> sentences);

}  // namespace aglab
