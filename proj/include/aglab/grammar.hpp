#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aglab/corpus.hpp"
#include "aglab/morphology.hpp"

namespace aglab {

/// Parameters of the synthetic Basque-like grammar.
struct GrammarConfig {
  std::size_t num_sentences = 1000;
  std::size_t noun_lexicon_size = 600;
  double a_final_lemma_fraction = 0.15;
  /// Fraction of sentences containing a dative argument.
  double dative_rate = 0.035;
  /// Fraction of transitive clauses whose ergative NP is dropped.
  double ergative_omission_rate = 0.55;
  double transitive_rate = 0.5;
  double multi_clause_rate = 0.3;
  std::size_t max_clauses = 2;
  bool word_order_shuffle = true;
  /// Probability that an NP carries a post-nominal adjective (the adjective
  /// then hosts the suffix).
  double adjective_rate = 0.2;
  double adverb_rate = 0.2;
  /// Probability that an argument noun is drawn from the noun class
  /// associated with its role instead of from the whole lexicon.
  double role_bias = 0.85;
  /// Probability that an additional clause is embedded inside the first
  /// clause instead of being coordinated after it.
  double embed_rate = 0.5;
  /// Probability that an additional clause's units are merged into the
  /// matrix clause in random order (arguments of the two clauses interleave).
  double interleave_rate = 0.5;
  /// Probability that an additional clause is non-finite: its verb takes
  /// the "-tzeko" form and no auxiliary agrees with its arguments.
  double nonfinite_rate = 0.5;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Unknown keys and out-of-range values raise ConfigError.
  static GrammarConfig from_json(const nlohmann::json& j);
};

/// Valid (transitivity, agreement) combinations: transitive clauses agree
/// with an ergative in {Sg, Pl, None}, intransitive ones never do; the
/// absolutive is Sg or Pl; the dative is Sg, Pl or None.
bool is_valid_agreement(bool transitive, const AgreementTriple& triple);

/// Synthetic auxiliary paradigm: one distinct surface per valid
/// (transitivity, triple). Throws InvalidInput for invalid combinations.
std::string aux_form(bool transitive, const AgreementTriple& triple);

struct AgreementReading {
  bool transitive = false;
  AgreementTriple triple;
  bool operator==(const AgreementReading&) const = default;
};

/// Inverse of aux_form. Throws LookupError for unknown surfaces.
AgreementReading oracle_agreement(std::string_view aux_surface);
bool is_aux_form(std::string_view surface);

/// Every valid (transitivity, triple) pair, in a fixed order.
std::vector<AgreementReading> all_valid_agreements();

struct GeneratedCorpus {
  std::vector<Sentence> sentences;  // each carries gold_clauses
  LemmaLexicon lexicon;
};

/// Deterministic in config.seed; sentence i draws from a generator seeded by
/// (seed, i), so the output does not depend on `workers`.
GeneratedCorpus generate_corpus(const GrammarConfig& config, unsigned workers = 1);

/// Lexicon of the synthetic grammar alone (what generate_corpus returns).
LemmaLexicon synthetic_lexicon(const GrammarConfig& config);

/// Per-token suffix determined by the gold attachments. Throws InvalidInput
/// when an attachment points at a verb.
std::vector<NuclearSuffix> oracle_suffix(const Sentence& sentence,
                                         std::span<const GoldClause> clauses);

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t clauses = 0;
  double dative_rate = 0.0;             // sentences containing a dative NP
  double ergative_omission_rate = 0.0;  // dropped ergatives / transitive clauses
  double ak_density = 0.0;              // -ak tokens / tokens
  double a_final_lemma_rate = 0.0;      // noun tokens with an -a-final lemma
  double multi_clause_rate = 0.0;

  nlohmann::json to_json() const;
};

CorpusStats compute_stats(std::span<const Sentence> sentences);

}  // namespace aglab
