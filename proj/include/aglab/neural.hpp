#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "aglab/datasets.hpp"

namespace aglab {

enum class ModelVariant {
  Bidirectional,
  /// Forward direction only; heads read the forward state.
  Unidirectional,
  /// No recurrence; heads read the word embedding itself.
  WordOnly,
};

std::string_view to_string(ModelVariant v);
std::optional<ModelVariant> parse_model_variant(std::string_view s);

struct ModelDims {
  int embed = 150;
  int hidden = 150;
  int head_hidden = 128;
  int token_rows = 0;
  int lemma_rows = 0;
  int ngram_rows = 0;
  ModelVariant variant = ModelVariant::Bidirectional;

  /// Width of the per-position vector the heads consume.
  int state_dim() const;
  bool operator==(const ModelDims&) const = default;
};

/// Location of one weight block inside the flat parameter vector. Blocks are
/// column-major; an embedding table is stored as [dim x rows], i.e. one
/// contiguous vector per vocabulary row.
struct Block {
  std::size_t offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

struct LstmBlocks {
  Block wx, wh, bias;  // gate order: input, forget, cell, output
};

struct MlpBlocks {
  Block w1, b1, w2, b2;
};

/// Table order of the flat vector (and of checkpoint files): token, lemma and
/// ngram tables, forward cell, backward cell, the erg/abs/dat verb heads, the
/// suffix head.
struct ParamLayout {
  explicit ParamLayout(const ModelDims& dims);

  Block token_table, lemma_table, ngram_table;
  LstmBlocks forward, backward;
  std::array<MlpBlocks, 3> verb_heads;
  MlpBlocks suffix_head;
  std::size_t size = 0;
};

/// Flat double buffer with Eigen's alignment, so vectorized kernels peel at
/// the same element in every run.
using AlignedVector = std::vector<double, Eigen::aligned_allocator<double>>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

inline ConstMap view(std::span<const double> buf, const Block& b) {
  return ConstMap(buf.data() + b.offset, b.rows, b.cols);
}
inline MutMap view(std::span<double> buf, const Block& b) {
  return MutMap(buf.data() + b.offset, b.rows, b.cols);
}

class Model {
 public:
  /// All parameters zero.
  explicit Model(const ModelDims& dims);

  /// Embeddings ~ N(0, 0.1^2); recurrent and head weights uniform in
  /// [-1/sqrt(fan), 1/sqrt(fan)]; forget-gate bias 1, other biases 0.
  static Model initialize(const ModelDims& dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  ConstMap view(const Block& b) const { return aglab::view(params(), b); }
  MutMap view(const Block& b) { return aglab::view(params(), b); }

  std::uint64_t hash() const;

 private:
  ModelDims dims_;
  ParamLayout layout_;
  AlignedVector params_;
};

// ----------------------------------------------------------------------------
// Encoded inputs
// ----------------------------------------------------------------------------

struct EncodedWord {
  int token = 0;
  int lemma = 0;
  std::vector<int> ngrams;
  /// Reserved symbols embed through the token table only.
  bool reserved = false;
};

EncodedWord encode_word(const Token& token, const Vocab& vocab);

/// Interns (surface, lemma) pairs so each word type is encoded once.
class WordIndex {
 public:
  int intern(const Token& token, const Vocab& vocab);
  const EncodedWord& operator[](int id) const { return words_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<EncodedWord> words_;
};

using WordSequence = std::vector<int>;

/// Sentinel suffix target for positions that are not scored.
inline constexpr int kIneligible = -1;

struct EncodedSet {
  Task task = Task::VerbNumber;
  std::vector<WordSequence> sequences;
  std::vector<int> mask_index;                   // verb task
  std::vector<AgreementTriple> verb_labels;      // verb task
  std::vector<std::vector<int>> suffix_targets;  // suffix task: class id or kIneligible

  std::size_t size() const { return sequences.size(); }
};

EncodedSet encode_instances(std::span<const VerbTaskInstance> instances, const Vocab& vocab,
                            WordIndex& words);
EncodedSet encode_instances(std::span<const SuffixTaskInstance> instances, const Vocab& vocab,
                            WordIndex& words);

// ----------------------------------------------------------------------------
// Forward computations
// ----------------------------------------------------------------------------

/// E_t[token] + E_l[lemma] + sum of E_ng[ngram].
Vector embed(const EncodedWord& word, const Model& model);

/// Inputs are [embed x T]; returns [state_dim x T]. For the bidirectional
/// variant column i is the forward state over 0..i stacked on the backward
/// state over i..T-1. Throws InvalidInput for an empty sequence.
Matrix encode(const Matrix& inputs, const Model& model);

/// Three independent distributions over {Sg, Pl, None} for erg, abs, dat.
std::array<Eigen::Vector3d, 3> verb_distributions(const Vector& state, const Model& model);

/// One distribution over {A, Ak, Ek, Ari, Ei, None} per column.
Matrix suffix_distributions(const Matrix& states, const Model& model);

/// Embeds and encodes one sequence.
Matrix hidden_states(const Model& model, const WordIndex& words, const WordSequence& sequence);

// ----------------------------------------------------------------------------
// Training objective
// ----------------------------------------------------------------------------

/// Mean cross-entropy over the batch (over the three roles of every verb
/// instance, or over eligible suffix positions) and its gradient, written to
/// `gradient` (which must be zero on entry and layout-sized). Throws
/// NumericalError naming `batch_id` when the loss is not finite.
double loss_and_gradients(const Model& model, const WordIndex& words, const EncodedSet& set,
                          std::span<const std::size_t> batch, std::span<double> gradient,
                          std::size_t batch_id = 0);

/// Loss only.
double batch_loss(const Model& model, const WordIndex& words, const EncodedSet& set,
                  std::span<const std::size_t> batch);

/// Per-instance distributions, computed in length-grouped blocks.
std::vector<std::array<Eigen::Vector3d, 3>> verb_predictions(const Model& model,
                                                             const WordIndex& words,
                                                             const EncodedSet& set,
                                                             unsigned workers = 1);
std::vector<Matrix> suffix_predictions(const Model& model, const WordIndex& words,
                                       const EncodedSet& set, unsigned workers = 1);
/// States for every sequence of the set.
std::vector<Matrix> all_hidden_states(const Model& model, const WordIndex& words,
                                      const EncodedSet& set, unsigned workers = 1);

// ----------------------------------------------------------------------------
// Optimizer
// ----------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  explicit AdamState(std::size_t n, AdamConfig config = {})
      : config(config), first_moment(n, 0.0), second_moment(n, 0.0) {}

  AdamConfig config;
  std::uint64_t step = 0;
  AlignedVector first_moment;
  AlignedVector second_moment;
};

/// Bias-corrected Adam update in place. Rejects non-finite gradients before
/// touching any state.
void adam_step(std::span<double> params, std::span<const double> gradient, AdamState& state);

// ----------------------------------------------------------------------------
// Checkpoints
// ----------------------------------------------------------------------------

struct Checkpoint {
  Model model;
  std::uint64_t vocab_hash = 0;
  std::uint64_t step = 0;
};

/// Binary layout: "AGLABCKP", u32 version, u32 variant, u64 embed, hidden,
/// head_hidden, token_rows, lemma_rows, ngram_rows, vocab_hash, step,
/// parameter count, then little-endian f64 parameters in table order.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Refuses files whose vocabulary hash differs from `expected_vocab_hash`.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_vocab_hash);

// Little-endian primitives shared by the binary formats.
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);

}  // namespace aglab
