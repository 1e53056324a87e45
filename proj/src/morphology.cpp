#include "aglab/morphology.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace aglab {

std::string_view marker_token(NumberMarker m) {
  switch (m) {
    case NumberMarker::SgMark: return kSgMark;
    case NumberMarker::PlMark: return kPlMark;
    case NumberMarker::AmbMark: return kAmbMark;
  }
  return kUnk;
}

std::string_view suffix_string(NuclearSuffix s) {
  switch (s) {
    case NuclearSuffix::A: return "a";
    case NuclearSuffix::Ak: return "ak";
    case NuclearSuffix::Ek: return "ek";
    case NuclearSuffix::Ari: return "ari";
    case NuclearSuffix::Ei: return "ei";
    case NuclearSuffix::None: return "";
  }
  return "";
}

void LemmaLexicon::add(std::string surface, std::string lemma) {
  if (!lemma.empty() && lemma.back() == 'a') a_final_lemmas_.insert(lemma);
  entries_.insert_or_assign(std::move(surface), std::move(lemma));
}

std::optional<std::string_view> LemmaLexicon::lemma_of(std::string_view surface) const {
  auto it = entries_.find(surface);
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

bool LemmaLexicon::contains(std::string_view surface) const {
  return entries_.find(surface) != entries_.end();
}

bool LemmaLexicon::is_a_final_lemma(std::string_view word) const {
  return a_final_lemmas_.find(word) != a_final_lemmas_.end();
}

LemmaLexicon LemmaLexicon::read_tsv(std::istream& in) {
  LemmaLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(lineno, "expected two tab-separated columns");
    }
    if (tab == 0 || tab + 1 == line.size()) throw ParseError(lineno, "empty column");
    lex.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return lex;
}

LemmaLexicon LemmaLexicon::read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  return read_tsv(in);
}

void LemmaLexicon::write_tsv(std::ostream& out) const {
  for (const auto& [surface, lemma] : entries_) out << surface << '\t' << lemma << '\n';
}

void LemmaLexicon::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write lexicon " + path.string());
  write_tsv(out);
}

namespace {

bool ends_with(std::string_view s, std::string_view tail) {
  return s.size() > tail.size() && s.substr(s.size() - tail.size()) == tail;
}

}  // namespace

std::optional<Segmentation> segment(std::string_view surface, const LemmaLexicon& lexicon) {
  // Longest suffixes first; each requires a non-empty stem.
  for (NuclearSuffix s : {NuclearSuffix::Ari, NuclearSuffix::Ei, NuclearSuffix::Ak,
                          NuclearSuffix::Ek}) {
    const auto tail = suffix_string(s);
    if (ends_with(surface, tail)) {
      return Segmentation{std::string(surface.substr(0, surface.size() - tail.size())), s};
    }
  }
  if (!surface.empty() && surface.back() == 'a') {
    if (lexicon.is_a_final_lemma(surface)) {
      return Segmentation{std::string(surface), NuclearSuffix::None};
    }
    const auto stem = surface.substr(0, surface.size() - 1);
    if (!stem.empty() && lexicon.contains(stem)) {
      return Segmentation{std::string(stem), NuclearSuffix::A};
    }
    return std::nullopt;
  }
  return Segmentation{std::string(surface), NuclearSuffix::None};
}

std::string attach(std::string_view stem, NuclearSuffix suffix) {
  std::string out(stem);
  out += suffix_string(suffix);
  return out;
}

std::optional<NumberMarker> number_marker(NuclearSuffix s) {
  switch (s) {
    case NuclearSuffix::Ek:
    case NuclearSuffix::Ei: return NumberMarker::PlMark;
    case NuclearSuffix::A:
    case NuclearSuffix::Ari: return NumberMarker::SgMark;
    case NuclearSuffix::Ak: return NumberMarker::AmbMark;
    case NuclearSuffix::None: return std::nullopt;
  }
  return std::nullopt;
}

std::string neutralize(std::string_view surface, const LemmaLexicon& lexicon) {
  const auto seg = segment(surface, lexicon);
  if (!seg) return std::string(surface);
  const auto marker = number_marker(seg->suffix);
  if (!marker) return std::string(surface);
  return seg->stem + std::string(marker_token(*marker));
}

std::vector<std::pair<CaseRole, NumberTag>> suffix_to_case_number(NuclearSuffix suffix) {
  using enum CaseRole;
  using enum NumberTag;
  switch (suffix) {
    case NuclearSuffix::A: return {{Absolutive, Singular}};
    case NuclearSuffix::Ak: return {{Absolutive, Plural}, {Ergative, Singular}};
    case NuclearSuffix::Ek: return {{Ergative, Plural}};
    case NuclearSuffix::Ari: return {{Dative, Singular}};
    case NuclearSuffix::Ei: return {{Dative, Plural}};
    case NuclearSuffix::None: break;
  }
  throw InvalidInput("suffix_to_case_number: no case/number cell for the empty suffix");
}

NuclearSuffix case_number_to_suffix(CaseRole role, NumberTag number) {
  const bool sg = number == NumberTag::Singular;
  switch (role) {
    case CaseRole::Absolutive: return sg ? NuclearSuffix::A : NuclearSuffix::Ak;
    case CaseRole::Ergative: return sg ? NuclearSuffix::Ak : NuclearSuffix::Ek;
    case CaseRole::Dative: return sg ? NuclearSuffix::Ari : NuclearSuffix::Ei;
  }
  return NuclearSuffix::None;
}

}  // namespace aglab
