#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aglab/grammar.hpp"
#include "aglab/probing.hpp"
#include "aglab/training.hpp"

namespace aglab::cli {

/// Bad command line or a task/ablation combination that cannot run.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Declarative experiment config. All randomness derives from `seed`
/// through the named streams corpus, mask, split, init and probe.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  GrammarConfig grammar;
  /// External corpus (JSONL) and lexicon used instead of the grammar.
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> lexicon;
  SplitSpec split;
  std::size_t vocab_cap = kDefaultVocabCap;
  TrainConfig train;
  ProbeConfig probe;

  void validate() const;
  nlohmann::json to_json() const;
  /// Relative paths resolve against `base`. Unknown keys and per-section
  /// seeds raise ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  GrammarConfig grammar_config() const;
  SplitSpec split_spec() const;
  std::uint64_t mask_seed() const;
  ProbeConfig probe_config() const;
};

/// One row of a condition grid.
struct Condition {
  Task task = Task::VerbNumber;
  std::vector<Ablation> ablations;
  ModelVariant variant = ModelVariant::Bidirectional;

  /// "verb-base", "verb-single-verb+no-ak", "suffix-base.word-only", ...
  std::string id() const;
  /// Id of the task files (the variant does not change the data).
  std::string data_id() const;
  /// Table row label.
  std::string label() const;
  /// Throws UsageError for combinations that cannot run.
  void validate() const;

  static Condition parse(std::string_view task, const std::vector<std::string>& ablations,
                         std::string_view variant = "bidirectional");
  static Condition from_id(std::string_view id);
};

std::vector<Condition> verb_grid();
std::vector<Condition> suffix_grid();

class RunDir {
 public:
  explicit RunDir(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path config() const { return root_ / "config.json"; }
  std::filesystem::path corpus() const { return root_ / "corpus.jsonl"; }
  std::filesystem::path corpus_stats() const { return root_ / "corpus.stats.json"; }
  std::filesystem::path lexicon() const { return root_ / "lexicon.tsv"; }
  std::filesystem::path vocab() const { return root_ / "vocab.tsv"; }
  std::filesystem::path split(std::string_view name) const;
  std::filesystem::path task_file(const Condition& c, std::string_view split) const;
  std::filesystem::path checkpoint(const Condition& c) const;
  std::filesystem::path manifest(const Condition& c) const;
  std::filesystem::path metrics_json(const Condition& c) const;
  std::filesystem::path metrics_tsv(const Condition& c) const;
  std::filesystem::path report(std::string_view name) const;

 private:
  std::filesystem::path root_;
};

/// --out, else $AGLAB_RUN_DIR/<name>, else runs/<name>.
std::filesystem::path resolve_run_dir(const std::optional<std::filesystem::path>& out,
                                      const std::string& name);

// Pipeline stages. Each reads what the previous ones wrote under the run
// directory and logs one line per artifact to `log`.
void gen_corpus(const ExperimentConfig& config, const RunDir& run, std::ostream& log);
void build_vocab(const ExperimentConfig& config, const RunDir& run, std::ostream& log);
void build_task(const ExperimentConfig& config, const RunDir& run, const Condition& c,
                std::ostream& log);
void train_condition(const ExperimentConfig& config, const RunDir& run, const Condition& c,
                     std::ostream& log);
/// Writes metrics/<id>.json (no wall-clock fields) and metrics/<id>.tsv.
nlohmann::json evaluate_condition(const ExperimentConfig& config, const RunDir& run,
                                  const Condition& c, std::ostream& log);
/// Condition tables over every metrics file present.
void report(const RunDir& run, std::ostream& log);

struct ProbeSources {
  /// Checkpoint condition; its model must be a suffix model.
  Condition condition;
  /// Annotated corpora for the generalization probes; default to the run's
  /// train and test splits.
  std::optional<std::filesystem::path> annotated_train;
  std::optional<std::filesystem::path> annotated_test;
  AnnotatedFormat format = AnnotatedFormat::Tsv8;
  bool dump_states = false;
};

nlohmann::json probe(const ExperimentConfig& config, const RunDir& run,
                     const ProbeSources& sources, std::ostream& log);

/// Full run for each condition: corpus, vocab, tasks, train, evaluate, report.
void pipeline(const ExperimentConfig& config, const RunDir& run,
              const std::vector<Condition>& conditions, std::ostream& log);

/// Command-line entry point; returns the exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace aglab::cli
