#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aglab/corpus.hpp"
#include "aglab/morphology.hpp"

namespace aglab {

enum class Task { VerbNumber, SuffixRecovery };

enum class Ablation {
  SuffixesOnly,
  NoSuffixes,
  NeutralizedCase,
  SingleVerbFilter,
  NoAkFilter,
  NoVerb,
};

std::string_view to_string(Task t);
std::string_view to_string(Ablation a);
std::optional<Task> parse_task(std::string_view s);
std::optional<Ablation> parse_ablation(std::string_view s);

// ----------------------------------------------------------------------------
// Task instances
// ----------------------------------------------------------------------------

struct VerbTaskInstance {
  std::string sentence_id;
  /// Sentence tokens with one auxiliary replaced by the `<verb>` mask. All
  /// other token metadata is kept so filters can inspect it.
  std::vector<Token> input_tokens;
  int mask_index = 0;
  AgreementTriple label;
};

struct SuffixTaskInstance {
  std::string sentence_id;
  /// Tokens with nuclear suffixes stripped from non-verbs.
  std::vector<Token> input_tokens;
  std::vector<NuclearSuffix> labels;
  /// false for unknown "-a" words, which keep their surface and are not scored.
  std::vector<bool> eligible;
  std::optional<std::vector<GoldClause>> gold_clauses;
};

struct BuildStats {
  std::size_t skipped = 0;
};

/// One instance per sentence with at least one auxiliary known to the
/// agreement oracle; the masked auxiliary is drawn uniformly with a generator
/// seeded by (seed, sentence id).
std::vector<VerbTaskInstance> build_verb_task(std::span<const Sentence> sentences,
                                              std::uint64_t seed,
                                              BuildStats* stats = nullptr);

std::vector<SuffixTaskInstance> build_suffix_task(std::span<const Sentence> sentences,
                                                  const LemmaLexicon& lexicon);

/// Stripped input with each suffixed stem shown in its bare-determiner
/// citation form ("Kutxazaina bezeroa liburua ..."). Display only.
std::string display_text(const SuffixTaskInstance& instance);

/// Rejects NoVerb (the mask would collide with it).
std::vector<VerbTaskInstance> apply_ablation(std::vector<VerbTaskInstance> instances,
                                             Ablation mode, const LemmaLexicon& lexicon);
/// Only the filters and NoVerb apply to the suffix task; text rewrites of
/// nuclear suffixes are rejected.
std::vector<SuffixTaskInstance> apply_ablation(std::vector<SuffixTaskInstance> instances,
                                               Ablation mode, const LemmaLexicon& lexicon);

/// Surface symbol used by SuffixesOnly ("-a", "-ak", ..., "-" for none).
std::string suffix_symbol(NuclearSuffix s);

// ----------------------------------------------------------------------------
// Vocabulary
// ----------------------------------------------------------------------------

inline constexpr std::size_t kDefaultVocabCap = 100'000;

/// Contiguous substrings of lengths 1..5 (in code points) of "^" + w + "$",
/// with multiplicity.
std::vector<std::string> extract_ngrams(std::string_view surface);

class VocabTable {
 public:
  VocabTable();
  /// Id of `s`, or the id of `<unk>`.
  int id(std::string_view s) const;
  bool contains(std::string_view s) const;
  const std::string& string_of(int id) const { return strings_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return strings_.size(); }
  int unk_id() const { return 0; }
  const std::vector<std::string>& strings() const { return strings_; }

  void push(std::string s);

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, int> ids_;
};

struct Vocab {
  VocabTable tokens;
  VocabTable lemmas;
  VocabTable ngrams;

  std::uint64_t hash() const;

  /// TSV of (kind, string, id), kind in {token, lemma, ngram}.
  void write_tsv(std::ostream& out) const;
  void write_tsv(const std::filesystem::path& path) const;
  static Vocab read_tsv(std::istream& in);
  static Vocab read_tsv(const std::filesystem::path& path);
};

/// Counts tokens, lemmas and n-grams; reserved symbols are never counted.
class VocabBuilder {
 public:
  void add(const Token& t);
  void add(std::span<const Token> tokens) {
    for (const auto& t : tokens) add(t);
  }
  /// Most frequent `cap` entries per table, ties broken lexicographically.
  Vocab finish(std::size_t cap = kDefaultVocabCap) const;

 private:
  std::unordered_map<std::string, std::size_t> tokens_, lemmas_, ngrams_;
};

Vocab build_vocab(std::span<const Sentence> train_sentences, std::size_t cap = kDefaultVocabCap);

// ----------------------------------------------------------------------------
// Splits
// ----------------------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 935730.0 / 1324320.0;
  double dev_fraction = 129375.0 / 1324320.0;
  double test_fraction = 259215.0 / 1324320.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorpusSplit {
  std::vector<Sentence> train, dev, test;
};

/// Seeded shuffle, then |train| = round(n*f_train), |dev| = round(n*f_dev),
/// test takes the rest.
CorpusSplit split_corpus(std::span<const Sentence> sentences, const SplitSpec& spec);

// ----------------------------------------------------------------------------
// Annotated corpora
// ----------------------------------------------------------------------------

enum class AnnotatedFormat {
  /// index, surface, lemma, POS, case, number, head, dep_label
  Tsv8,
  /// Standard 10-column CoNLL-U (case and number read from FEATS).
  ConllU,
};

std::vector<Sentence> read_annotated(std::istream& in, AnnotatedFormat format);
std::vector<Sentence> read_annotated(const std::filesystem::path& path, AnnotatedFormat format);
void write_annotated(std::ostream& out, std::span<const Sentence> sentences);

}  // namespace aglab
