#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aglab/datasets.hpp"
#include "aglab/neural.hpp"

namespace aglab {

enum class ProbeArch { Linear, Mlp1, Mlp2 };
std::string_view to_string(ProbeArch a);
std::optional<ProbeArch> parse_probe_arch(std::string_view s);

enum class Selector {
  SuffixEligible,
  NuclearSuffixed,
  AkSuffixed,
  AllTokens,
};
std::string_view to_string(Selector s);
std::optional<Selector> parse_selector(std::string_view s);

enum class ProbeLabel {
  /// Whether the word's closest verb is its governing verb.
  ClosestVerb,
  /// Nuclear case (erg/abs/dat/none).
  NuclearCase,
  Number,
  /// Free case tag (any case).
  CaseTag,
  /// Binary: carries any case tag.
  AnyCase,
  /// Ergative singular vs absolutive plural, for -ak words.
  AkReading,
  Pos,
  DepLabel,
};
std::string_view to_string(ProbeLabel l);
std::optional<ProbeLabel> parse_probe_label(std::string_view s);

struct ProbeRecord {
  Eigen::VectorXd state;
  int label = 0;
  bool main_model_correct = false;
  std::string sentence_id;
  int token_index = 0;
};

/// Records stored column-wise: states is [dim x count].
struct ProbeDataset {
  Eigen::MatrixXd states;
  std::vector<int> labels;
  std::vector<bool> main_model_correct;
  std::vector<std::string> sentence_ids;
  std::vector<int> token_indices;
  std::vector<std::string> label_names;

  std::size_t size() const { return labels.size(); }
  Eigen::Index dim() const { return states.rows(); }
  ProbeRecord record(std::size_t i) const;
  /// Records at the given indices, same label table.
  ProbeDataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> label_counts() const;
};

/// Label string of one token; throws InvalidInput naming the missing
/// annotation field.
std::string probe_label(const Sentence& sentence, std::size_t position, ProbeLabel kind);

bool selector_matches(Selector s, const SuffixTaskInstance& inst, const Token& original,
                      std::size_t position);

/// Runs the suffix model over the stripped sentences and keeps one record
/// per selected position. Labels are interned in first-seen order unless
/// `label_names` fixes the table (unknown labels then raise InvalidInput).
ProbeDataset collect_states(const Model& model, const Vocab& vocab, const LemmaLexicon& lexicon,
                            std::span<const Sentence> sentences, Selector selector,
                            ProbeLabel label, std::vector<std::string> label_names = {},
                            unsigned workers = 1);

struct ProbeConfig {
  ProbeArch arch = ProbeArch::Mlp2;
  int mlp1_width = 128;
  std::size_t seeds = 5;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double dev_fraction = 0.2;
  /// Cap on training records per generalization probe; 0 = no cap.
  std::size_t max_records = 20'000;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ProbeConfig from_json(const nlohmann::json& j);
};

/// Feed-forward classifier; tanh hidden layers. A probe with no layers is
/// the constant majority classifier.
struct Probe {
  ProbeArch arch = ProbeArch::Linear;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::optional<int> constant;

  bool is_constant() const { return constant.has_value(); }
  /// [classes x n] logits for [dim x n] states.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& states) const;
  std::vector<int> predict(const Eigen::MatrixXd& states) const;
};

struct ProbeRun {
  std::uint64_t seed = 0;
  double dev_accuracy = 0.0;
};

struct ProbeTraining {
  Probe probe;
  std::vector<ProbeRun> runs;
  /// Index into runs, or -1 when the majority constant won.
  int selected = -1;
  double selected_dev_accuracy = 0.0;
  double majority_dev_accuracy = 0.0;
  int majority_class = 0;
};

/// Seeded 80/20 split of `records` into probe-train / probe-dev, then
/// config.seeds probes trained on probe-train; the best probe-dev accuracy
/// wins, with the probe-train majority constant as a floor candidate.
/// Rejects record sets with fewer than two classes.
ProbeTraining train_probe(const ProbeDataset& records, const ProbeConfig& config);

struct Accuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> value() const;
};

struct DifferentialReport {
  ProbeArch arch = ProbeArch::Linear;
  Accuracy total;
  Accuracy main_correct;
  Accuracy main_wrong;
  Accuracy majority;
  int majority_class = 0;

  /// n_correct * acc_correct + n_wrong * acc_wrong == n * acc, on counts.
  bool identity_holds() const;
  nlohmann::json to_json(const std::vector<std::string>& label_names) const;
};

DifferentialReport differential_report(const Probe& probe, const ProbeDataset& records);

/// Most frequent label (smallest id on ties) and its count.
std::pair<int, std::size_t> majority_label(const ProbeDataset& records);

struct GeneralizationRow {
  std::string property;
  Selector selector = Selector::AllTokens;
  ProbeLabel label = ProbeLabel::Pos;
  std::optional<DifferentialReport> report;
  std::vector<std::string> label_names;
  double selected_dev_accuracy = 0.0;
  double majority_dev_accuracy = 0.0;
  /// Set when the probe was skipped.
  std::string notice;
};

/// Number, nuclear case, case tag, -ak reading, POS, any-case and
/// dependency-label probes. Probes whose annotation layer is missing are
/// skipped with a notice.
std::vector<GeneralizationRow> generalization_suite(const Model& model, const Vocab& vocab,
                                                    const LemmaLexicon& lexicon,
                                                    std::span<const Sentence> train_sentences,
                                                    std::span<const Sentence> test_sentences,
                                                    ProbeConfig config, unsigned workers = 1);

nlohmann::json to_json(const GeneralizationRow& row);
std::string differential_table(std::span<const DifferentialReport> reports);
std::string generalization_table(std::span<const GeneralizationRow> rows);

// Binary state dump: "AGLABSTD", u32 version, u64 dim, u64 count, u64 label
// count, labels (u64 length + bytes), then per record: u64 label, u8 main
// model correct, u64 token index, sentence id (u64 length + bytes), dim f64.
void write_state_dump(const std::filesystem::path& path, const ProbeDataset& records);
ProbeDataset read_state_dump(const std::filesystem::path& path);

}  // namespace aglab
