#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aglab {

// ----------------------------------------------------------------------------
// Errors. Every failure the library reports derives from aglab::Error so the
// CLI can map it onto a stable exit code.
// ----------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller's input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration value; carries the offending field name.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// ----------------------------------------------------------------------------
// Grammatical categories shared by every module.
// ----------------------------------------------------------------------------

enum class CaseRole : std::uint8_t { Ergative, Absolutive, Dative };
enum class NumberTag : std::uint8_t { Singular, Plural };

/// Number slot of one verb argument. The enumerator order is the prediction
/// tie-break order (Sg < Pl < None).
enum class ArgNumber : std::uint8_t { Sg, Pl, None };

/// Determined nuclear case suffixes, in prediction tie-break order.
enum class NuclearSuffix : std::uint8_t { A, Ak, Ek, Ari, Ei, None };

inline constexpr std::array<CaseRole, 3> kCaseRoles{
    CaseRole::Ergative, CaseRole::Absolutive, CaseRole::Dative};
inline constexpr std::array<ArgNumber, 3> kArgNumbers{ArgNumber::Sg, ArgNumber::Pl,
                                                      ArgNumber::None};
inline constexpr std::array<NuclearSuffix, 6> kSuffixClasses{
    NuclearSuffix::A,   NuclearSuffix::Ak, NuclearSuffix::Ek,
    NuclearSuffix::Ari, NuclearSuffix::Ei, NuclearSuffix::None};
/// The five suffix classes scored by the evaluation (None excluded).
inline constexpr std::array<NuclearSuffix, 5> kScoredSuffixes{
    NuclearSuffix::A, NuclearSuffix::Ak, NuclearSuffix::Ek, NuclearSuffix::Ari,
    NuclearSuffix::Ei};

inline constexpr int kArgClasses = 3;
inline constexpr int kSuffixClassCount = 6;

constexpr int index_of(CaseRole r) { return static_cast<int>(r); }
constexpr int index_of(ArgNumber n) { return static_cast<int>(n); }
constexpr int index_of(NuclearSuffix s) { return static_cast<int>(s); }

constexpr ArgNumber to_arg_number(NumberTag n) {
  return n == NumberTag::Singular ? ArgNumber::Sg : ArgNumber::Pl;
}

std::string_view to_string(CaseRole r);
std::string_view to_string(NumberTag n);
std::string_view to_string(ArgNumber n);
std::string_view to_string(NuclearSuffix s);

std::optional<CaseRole> parse_case_role(std::string_view s);
std::optional<NumberTag> parse_number_tag(std::string_view s);
std::optional<ArgNumber> parse_arg_number(std::string_view s);
std::optional<NuclearSuffix> parse_nuclear_suffix(std::string_view s);

/// Agreement of one finite verb with its three nuclear arguments.
struct AgreementTriple {
  ArgNumber erg = ArgNumber::None;
  ArgNumber abs = ArgNumber::None;
  ArgNumber dat = ArgNumber::None;

  ArgNumber& operator[](CaseRole r) {
    return r == CaseRole::Ergative ? erg : r == CaseRole::Absolutive ? abs : dat;
  }
  ArgNumber operator[](CaseRole r) const {
    return r == CaseRole::Ergative ? erg : r == CaseRole::Absolutive ? abs : dat;
  }
  bool operator==(const AgreementTriple&) const = default;
};

std::string to_string(const AgreementTriple& t);

// ----------------------------------------------------------------------------
// Hashing and seed derivation. All randomness flows from one 64-bit seed
// through named sub-streams, so results do not depend on evaluation order.
// ----------------------------------------------------------------------------

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  return splitmix64(seed ^ fnv1a(stream));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL));
}

/// Reserved vocabulary symbols.
inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kVerbMask = "<verb>";
inline constexpr std::string_view kSgMark = "<sg>";
inline constexpr std::string_view kPlMark = "<pl>";
inline constexpr std::string_view kAmbMark = "<amb>";
inline constexpr std::array<std::string_view, 5> kReservedSymbols{kUnk, kVerbMask, kSgMark,
                                                                  kPlMark, kAmbMark};

bool is_reserved_symbol(std::string_view s);

}  // namespace aglab
