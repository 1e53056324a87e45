#include <doctest.h>

#include <random>
#include <sstream>

#include "aglab/morphology.hpp"

using namespace aglab;

namespace {

LemmaLexicon example_lexicon() {
  LemmaLexicon lex;
  lex.add("kutxazain", "kutxazain");
  lex.add("bezero", "bezero");
  lex.add("liburu", "liburu");
  lex.add("ur", "ur");
  lex.add("uda", "uda");
  return lex;
}

std::string random_stem(std::mt19937_64& rng) {
  static const std::string letters = "bdefghijklmnoprstuxz";
  std::uniform_int_distribution<int> len(2, 9);
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::string s;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) s += letters[pick(rng)];
  static const std::string finals = "bdlnrstz";
  s += finals[pick(rng) % finals.size()];
  return s;
}

}  // namespace

TEST_CASE("segment splits the determined suffixes") {
  const auto lex = example_lexicon();
  CHECK(segment("kutxazainek", lex) == Segmentation{"kutxazain", NuclearSuffix::Ek});
  CHECK(segment("liburuak", lex) == Segmentation{"liburu", NuclearSuffix::Ak});
  CHECK(segment("bezeroari", lex) == Segmentation{"bezero", NuclearSuffix::Ari});
  CHECK(segment("bezeroei", lex) == Segmentation{"bezero", NuclearSuffix::Ei});
}

TEST_CASE("segment resolves final a through the lexicon") {
  const auto lex = example_lexicon();
  CHECK(segment("uda", lex) == Segmentation{"uda", NuclearSuffix::None});
  CHECK(segment("ura", lex) == Segmentation{"ur", NuclearSuffix::A});
  CHECK_FALSE(segment("mendia", lex).has_value());
}

TEST_CASE("segment leaves unsuffixed words alone") {
  const auto lex = example_lexicon();
  CHECK(segment("eman", lex) == Segmentation{"eman", NuclearSuffix::None});
}

TEST_CASE("attach concatenates") {
  CHECK(attach("kutxazain", NuclearSuffix::Ek) == "kutxazainek");
  CHECK(attach("liburu", NuclearSuffix::Ak) == "liburuak");
  CHECK(attach("eman", NuclearSuffix::None) == "eman");
}

TEST_CASE("segment inverts attach on random stems") {
  std::mt19937_64 rng(11);
  LemmaLexicon lex;
  std::vector<std::string> stems;
  for (int i = 0; i < 500; ++i) {
    auto s = random_stem(rng);
    stems.push_back(s);
    lex.add(s, s);
  }
  std::uniform_int_distribution<std::size_t> pick(0, stems.size() - 1);
  std::uniform_int_distribution<int> suf(0, 5);
  for (int i = 0; i < 10000; ++i) {
    const auto& stem = stems[pick(rng)];
    const auto s = kSuffixClasses[static_cast<std::size_t>(suf(rng))];
    const auto seg = segment(attach(stem, s), lex);
    REQUIRE(seg.has_value());
    CHECK(seg->stem == stem);
    CHECK(seg->suffix == s);
  }
}

TEST_CASE("neutralize replaces suffixes by number markers") {
  const auto lex = example_lexicon();
  CHECK(neutralize("kutxazainek", lex) == "kutxazain<pl>");
  CHECK(neutralize("liburuak", lex) == "liburu<amb>");
  CHECK(neutralize("bezeroari", lex) == "bezero<sg>");
  CHECK(neutralize("bezeroei", lex) == "bezero<pl>");
  CHECK(neutralize("ura", lex) == "ur<sg>");
  CHECK(neutralize("eman", lex) == "eman");
  CHECK(neutralize("uda", lex) == "uda");
  CHECK(neutralize("mendia", lex) == "mendia");
}

TEST_CASE("neutralize emits at most one marker") {
  const auto lex = example_lexicon();
  for (const char* w : {"kutxazainek", "liburuak", "ura", "uda", "x", "ak", "<verb>"}) {
    const auto out = neutralize(w, lex);
    std::size_t markers = 0;
    for (auto m : {kSgMark, kPlMark, kAmbMark}) {
      for (auto p = out.find(m); p != std::string::npos; p = out.find(m, p + 1)) ++markers;
    }
    CHECK(markers <= 1);
  }
}

TEST_CASE("suffix_to_case_number follows the suffix table") {
  using P = std::pair<CaseRole, NumberTag>;
  const auto ak = suffix_to_case_number(NuclearSuffix::Ak);
  CHECK(ak.size() == 2);
  CHECK(std::count(ak.begin(), ak.end(), P{CaseRole::Absolutive, NumberTag::Plural}) == 1);
  CHECK(std::count(ak.begin(), ak.end(), P{CaseRole::Ergative, NumberTag::Singular}) == 1);
  CHECK(suffix_to_case_number(NuclearSuffix::Ek) == std::vector<P>{{CaseRole::Ergative, NumberTag::Plural}});
  CHECK(suffix_to_case_number(NuclearSuffix::Ei) == std::vector<P>{{CaseRole::Dative, NumberTag::Plural}});
  CHECK(suffix_to_case_number(NuclearSuffix::A) == std::vector<P>{{CaseRole::Absolutive, NumberTag::Singular}});
  CHECK(suffix_to_case_number(NuclearSuffix::Ari) == std::vector<P>{{CaseRole::Dative, NumberTag::Singular}});
  CHECK_THROWS_AS(suffix_to_case_number(NuclearSuffix::None), InvalidInput);
}

TEST_CASE("case_number_to_suffix inverts the table") {
  for (auto s : kScoredSuffixes) {
    for (auto [role, number] : suffix_to_case_number(s)) CHECK(case_number_to_suffix(role, number) == s);
  }
}

TEST_CASE("lexicon TSV round-trip") {
  const auto lex = example_lexicon();
  std::stringstream ss;
  lex.write_tsv(ss);
  const auto back = LemmaLexicon::read_tsv(ss);
  CHECK(back.entries() == lex.entries());
  CHECK(back.is_a_final_lemma("uda"));
  std::stringstream bad("one\ttwo\tthree\n");
  CHECK_THROWS_AS(LemmaLexicon::read_tsv(bad), ParseError);
}
