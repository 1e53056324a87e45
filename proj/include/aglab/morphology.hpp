#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aglab/common.hpp"

namespace aglab {

/// Number marker substituted for a nuclear suffix by the neutralized-case
/// rewriting.
enum class NumberMarker : std::uint8_t { SgMark, PlMark, AmbMark };

std::string_view marker_token(NumberMarker m);

/// Surface string of a suffix without the hyphen ("ak" for Ak, "" for None).
std::string_view suffix_string(NuclearSuffix s);

/// Surface stem -> lemma table. Lemmas whose citation form ends in "a" are
/// tracked separately: for them the final "a" belongs to the lemma, not to a
/// determiner.
class LemmaLexicon {
 public:
  void add(std::string surface, std::string lemma);

  std::optional<std::string_view> lemma_of(std::string_view surface) const;
  bool contains(std::string_view surface) const;
  bool is_a_final_lemma(std::string_view word) const;

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  /// Two-column UTF-8 TSV (surface, lemma), one entry per line.
  static LemmaLexicon read_tsv(std::istream& in);
  static LemmaLexicon read_tsv(const std::filesystem::path& path);
  void write_tsv(std::ostream& out) const;
  void write_tsv(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::set<std::string, std::less<>> a_final_lemmas_;
};

struct Segmentation {
  std::string stem;
  NuclearSuffix suffix = NuclearSuffix::None;
  bool operator==(const Segmentation&) const = default;
};

/// Splits a surface form into stem and determined nuclear suffix by longest
/// match over {-ari, -ei, -ak, -ek, -a}. A trailing "a" is resolved through
/// the lexicon; std::nullopt means the word is an unknown "-a" form.
std::optional<Segmentation> segment(std::string_view surface, const LemmaLexicon& lexicon);

std::string attach(std::string_view stem, NuclearSuffix suffix);

/// Replaces a nuclear suffix by its number marker: -ek/-ei -> <pl>,
/// -a/-ari -> <sg>, -ak -> <amb>. Unsuffixed and unknown words are returned
/// unchanged.
std::string neutralize(std::string_view surface, const LemmaLexicon& lexicon);

std::optional<NumberMarker> number_marker(NuclearSuffix s);

/// Case/number cells realised by a suffix. -ak is syncretic and yields two
/// cells. Throws InvalidInput for NuclearSuffix::None.
std::vector<std::pair<CaseRole, NumberTag>> suffix_to_case_number(NuclearSuffix suffix);

NuclearSuffix case_number_to_suffix(CaseRole role, NumberTag number);

}  // namespace aglab
