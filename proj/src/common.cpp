#include "aglab/common.hpp"

#include <algorithm>

namespace aglab {

std::string_view to_string(CaseRole r) {
  switch (r) {
    case CaseRole::Ergative: return "erg";
    case CaseRole::Absolutive: return "abs";
    case CaseRole::Dative: return "dat";
  }
  return "?";
}

std::string_view to_string(NumberTag n) {
  return n == NumberTag::Singular ? "sg" : "pl";
}

std::string_view to_string(ArgNumber n) {
  switch (n) {
    case ArgNumber::Sg: return "sg";
    case ArgNumber::Pl: return "pl";
    case ArgNumber::None: return "none";
  }
  return "?";
}

std::string_view to_string(NuclearSuffix s) {
  switch (s) {
    case NuclearSuffix::A: return "a";
    case NuclearSuffix::Ak: return "ak";
    case NuclearSuffix::Ek: return "ek";
    case NuclearSuffix::Ari: return "ari";
    case NuclearSuffix::Ei: return "ei";
    case NuclearSuffix::None: return "none";
  }
  return "?";
}

std::optional<CaseRole> parse_case_role(std::string_view s) {
  if (s == "erg" || s == "Erg" || s == "ergative") return CaseRole::Ergative;
  if (s == "abs" || s == "Abs" || s == "absolutive") return CaseRole::Absolutive;
  if (s == "dat" || s == "Dat" || s == "dative") return CaseRole::Dative;
  return std::nullopt;
}

std::optional<NumberTag> parse_number_tag(std::string_view s) {
  if (s == "sg" || s == "Sing" || s == "singular") return NumberTag::Singular;
  if (s == "pl" || s == "Plur" || s == "plural") return NumberTag::Plural;
  return std::nullopt;
}

std::optional<ArgNumber> parse_arg_number(std::string_view s) {
  for (ArgNumber n : kArgNumbers) {
    if (to_string(n) == s) return n;
  }
  return std::nullopt;
}

std::optional<NuclearSuffix> parse_nuclear_suffix(std::string_view s) {
  for (NuclearSuffix x : kSuffixClasses) {
    if (to_string(x) == s) return x;
  }
  return std::nullopt;
}

std::string to_string(const AgreementTriple& t) {
  std::string out = "{erg:";
  out += to_string(t.erg);
  out += ", abs:";
  out += to_string(t.abs);
  out += ", dat:";
  out += to_string(t.dat);
  out += "}";
  return out;
}

bool is_reserved_symbol(std::string_view s) {
  return std::find(kReservedSymbols.begin(), kReservedSymbols.end(), s) !=
         kReservedSymbols.end();
}

}  // namespace aglab
