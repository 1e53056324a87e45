#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aglab/common.hpp"

namespace aglab {

struct Token {
  std::string surface;
  std::string lemma;
  bool is_verb = false;
  bool is_auxiliary = false;
  NuclearSuffix nuclear = NuclearSuffix::None;
  std::optional<CaseRole> gold_case;
  std::optional<NumberTag> gold_number;
  std::optional<std::string> pos;
  std::optional<std::string> dep_label;
  /// Free-form case tag (any case, not only nuclear ones); "none" when absent.
  std::optional<std::string> case_tag;
  /// 1-based head index, 0 for the root.
  std::optional<int> head;

  bool operator==(const Token&) const = default;
};

struct Attachment {
  int position = 0;
  CaseRole role = CaseRole::Absolutive;
  NumberTag number = NumberTag::Singular;
  bool operator==(const Attachment&) const = default;
};

/// One finite clause with its exact gold structure.
struct GoldClause {
  /// Position of the auxiliary carrying the agreement; for a non-finite
  /// clause, the position of its non-finite verb.
  int verb_index = 0;
  /// Position of the non-finite main verb, -1 when absent.
  int main_verb_index = -1;
  std::vector<Attachment> argument_attachments;
  bool transitive = false;
  /// Non-finite clauses have no auxiliary and agree with nothing.
  bool finite = true;
  /// Number of an ergative argument that was dropped from the surface but is
  /// still encoded on the auxiliary.
  std::optional<NumberTag> dropped_ergative;

  /// Agreement recomputed from the surviving arguments plus the omission
  /// record.
  AgreementTriple agreement() const;
  bool operator==(const GoldClause&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;
  std::optional<std::vector<GoldClause>> gold_clauses;

  bool operator==(const Sentence&) const = default;
};

/// Space-joined surface text.
std::string text(const Sentence& s);
std::string text(std::span<const Token> tokens);

std::size_t count_auxiliaries(std::span<const Token> tokens);

/// Exactly one auxiliary and at most one non-auxiliary verb, i.e. a single
/// verb complex.
bool is_single_verb(std::span<const Token> tokens);

// Corpus JSONL: one sentence per line,
//   {"id", "tokens": [{surface, lemma, is_verb, is_auxiliary, nuclear,
//    gold_case, gold_number, ...}], "clauses": [{verb, main_verb,
//    args: [[pos, case, number]], transitive, finite, dropped_erg}]}
std::string sentence_to_json_line(const Sentence& s);
Sentence sentence_from_json_line(std::string_view line, std::size_t lineno = 0);

void write_corpus_jsonl(std::ostream& out, std::span<const Sentence> sentences);
void write_corpus_jsonl(const std::filesystem::path& path, std::span<const Sentence> sentences);
std::vector<Sentence> read_corpus_jsonl(std::istream& in);
std::vector<Sentence> read_corpus_jsonl(const std::filesystem::path& path);

/// Checks structural invariants (non-empty, attachments in range, clause verb
/// on an auxiliary, no position attached twice). Throws InvalidInput.
void validate_sentence(const Sentence& s);

}  // namespace aglab
