#include <doctest.h>

#include <set>
#include <sstream>

#include "aglab/grammar.hpp"

using namespace aglab;

namespace {

std::vector<AgreementReading> all_tuples() {
  std::vector<AgreementReading> out;
  for (bool t : {false, true}) {
    for (auto e : kArgNumbers) {
      for (auto a : {ArgNumber::Sg, ArgNumber::Pl}) {
        for (auto d : kArgNumbers) out.push_back({t, {e, a, d}});
      }
    }
  }
  return out;
}

std::string corpus_bytes(const GeneratedCorpus& c) {
  std::ostringstream out;
  write_corpus_jsonl(out, c.sentences);
  return out.str();
}

// Agreement read off the surface: each surviving argument's host is
// segmented and its suffix mapped back to the attached role.
AgreementTriple surface_agreement(const Sentence& s, const GoldClause& c, const LemmaLexicon& lex) {
  AgreementTriple t;
  for (const auto& a : c.argument_attachments) {
    const auto seg = segment(s.tokens[static_cast<std::size_t>(a.position)].surface, lex);
    REQUIRE(seg.has_value());
    REQUIRE(seg->suffix != NuclearSuffix::None);
    bool found = false;
    for (auto [role, number] : suffix_to_case_number(seg->suffix)) {
      if (role == a.role) {
        t[role] = to_arg_number(number);
        found = true;
      }
    }
    REQUIRE(found);
  }
  if (c.dropped_ergative) t.erg = to_arg_number(*c.dropped_ergative);
  return t;
}

}  // namespace

TEST_CASE("aux_form is injective over valid inputs and rejects the rest") {
  std::set<std::string> forms;
  int valid = 0;
  int rejected = 0;
  for (const auto& r : all_tuples()) {
    if (!r.transitive && r.triple.erg != ArgNumber::None) {
      CHECK_FALSE(is_valid_agreement(r.transitive, r.triple));
      CHECK_THROWS_AS(aux_form(r.transitive, r.triple), InvalidInput);
      ++rejected;
      continue;
    }
    forms.insert(aux_form(r.transitive, r.triple));
    ++valid;
  }
  CHECK(valid == 24);
  CHECK(rejected == 12);
  CHECK(forms.size() == 24);
  CHECK(all_valid_agreements().size() == 24);
}

TEST_CASE("absent absolutive is not a valid agreement") {
  CHECK_FALSE(is_valid_agreement(true, {ArgNumber::Sg, ArgNumber::None, ArgNumber::None}));
  CHECK_THROWS_AS(aux_form(false, {ArgNumber::None, ArgNumber::None, ArgNumber::None}),
                  InvalidInput);
}

TEST_CASE("oracle_agreement inverts aux_form") {
  for (const auto& r : all_valid_agreements()) {
    const auto surface = aux_form(r.transitive, r.triple);
    CHECK(is_aux_form(surface));
    CHECK(oracle_agreement(surface) == r);
  }
  const AgreementReading ex1{true, {ArgNumber::Pl, ArgNumber::Pl, ArgNumber::Sg}};
  CHECK(oracle_agreement(aux_form(true, ex1.triple)) == ex1);
  const AgreementReading ex2{false, {ArgNumber::None, ArgNumber::Sg, ArgNumber::None}};
  CHECK(oracle_agreement(aux_form(false, ex2.triple)) == ex2);
  CHECK(aux_form(false, {ArgNumber::None, ArgNumber::Pl, ArgNumber::None}) !=
        aux_form(false, {ArgNumber::None, ArgNumber::Sg, ArgNumber::None}));
  CHECK_THROWS_AS(oracle_agreement("xyz"), LookupError);
  CHECK_FALSE(is_aux_form("xyz"));
}

TEST_CASE("generation is deterministic and independent of workers") {
  GrammarConfig cfg;
  cfg.num_sentences = 300;
  cfg.seed = 42;
  const auto a = corpus_bytes(generate_corpus(cfg));
  CHECK(a == corpus_bytes(generate_corpus(cfg)));
  CHECK(a == corpus_bytes(generate_corpus(cfg, 3)));
  cfg.seed = 43;
  CHECK(a != corpus_bytes(generate_corpus(cfg)));
}

TEST_CASE("multi_clause_rate 0 gives one clause per sentence") {
  GrammarConfig cfg;
  cfg.num_sentences = 500;
  cfg.multi_clause_rate = 0.0;
  for (const auto& s : generate_corpus(cfg).sentences) {
    REQUIRE(s.gold_clauses.has_value());
    CHECK(s.gold_clauses->size() == 1);
  }
}

TEST_CASE("auxiliaries agree with surviving arguments plus omissions") {
  GrammarConfig cfg;
  cfg.num_sentences = 3000;
  cfg.seed = 5;
  const auto corpus = generate_corpus(cfg);
  std::size_t checked = 0;
  for (const auto& s : corpus.sentences) {
    validate_sentence(s);
    for (const auto& c : *s.gold_clauses) {
      if (!c.finite) {
        CHECK(count_auxiliaries(s.tokens) >= 1);
        continue;
      }
      const auto& aux = s.tokens[static_cast<std::size_t>(c.verb_index)];
      REQUIRE(aux.is_auxiliary);
      const auto reading = oracle_agreement(aux.surface);
      CHECK(reading.transitive == c.transitive);
      CHECK(reading.triple == surface_agreement(s, c, corpus.lexicon));
      CHECK(reading.triple.abs != ArgNumber::None);
      ++checked;
    }
  }
  CHECK(checked >= cfg.num_sentences);
}

TEST_CASE("multi-clause sentences contain at least two verbs") {
  GrammarConfig cfg;
  cfg.num_sentences = 1000;
  cfg.multi_clause_rate = 1.0;
  for (const auto& s : generate_corpus(cfg).sentences) {
    std::size_t verbs = 0;
    for (const auto& t : s.tokens) verbs += t.is_verb;
    CHECK(s.gold_clauses->size() >= 2);
    CHECK(verbs >= 2);
  }
}

TEST_CASE("no intransitive clause has an ergative argument") {
  GrammarConfig cfg;
  cfg.num_sentences = 10000;
  cfg.seed = 9;
  std::size_t violations = 0;
  for (const auto& s : generate_corpus(cfg).sentences) {
    for (const auto& c : *s.gold_clauses) {
      if (c.transitive) continue;
      violations += c.dropped_ergative.has_value();
      for (const auto& a : c.argument_attachments) violations += a.role == CaseRole::Ergative;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("statistics match the config at 100k sentences") {
  GrammarConfig cfg;
  cfg.num_sentences = 100000;
  const auto corpus = generate_corpus(cfg);
  std::size_t dative = 0, transitive = 0, dropped = 0, nouns = 0, a_final = 0;
  for (const auto& s : corpus.sentences) {
    bool has_dative = false;
    for (const auto& t : s.tokens) {
      has_dative |= t.gold_case == CaseRole::Dative;
      if (t.pos == "NOUN") {
        ++nouns;
        a_final += corpus.lexicon.is_a_final_lemma(t.lemma);
      }
    }
    dative += has_dative;
    for (const auto& c : *s.gold_clauses) {
      if (!c.transitive) continue;
      ++transitive;
      dropped += c.dropped_ergative.has_value();
    }
  }
  const double n = static_cast<double>(corpus.sentences.size());
  CHECK(std::abs(dative / n - cfg.dative_rate) <= 0.005);
  CHECK(std::abs(static_cast<double>(dropped) / transitive - cfg.ergative_omission_rate) <= 0.005);
  CHECK(std::abs(static_cast<double>(a_final) / nouns - cfg.a_final_lemma_fraction) <= 0.005);
  const auto stats = compute_stats(corpus.sentences);
  CHECK(stats.dative_rate == doctest::Approx(dative / n));
}

TEST_CASE("oracle_suffix follows the attachments") {
  Sentence s;
  s.tokens = {{.surface = "kutxazainek", .lemma = "kutxazain"},
              {.surface = "liburuak", .lemma = "liburu"},
              {.surface = "eta", .lemma = "eta"},
              {.surface = "dizkiote", .lemma = "ukan", .is_verb = true, .is_auxiliary = true}};
  GoldClause c;
  c.verb_index = 3;
  c.transitive = true;
  c.argument_attachments = {{0, CaseRole::Ergative, NumberTag::Plural},
                            {1, CaseRole::Absolutive, NumberTag::Plural}};
  const std::vector<GoldClause> clauses{c};
  CHECK(oracle_suffix(s, clauses) == std::vector<NuclearSuffix>{NuclearSuffix::Ek, NuclearSuffix::Ak,
                                                                NuclearSuffix::None,
                                                                NuclearSuffix::None});
  auto bad = clauses;
  bad[0].argument_attachments.push_back({3, CaseRole::Dative, NumberTag::Singular});
  CHECK_THROWS_AS(oracle_suffix(s, bad), InvalidInput);
}

TEST_CASE("oracle_suffix is exact on generated corpora") {
  GrammarConfig cfg;
  cfg.num_sentences = 2000;
  const auto corpus = generate_corpus(cfg);
  for (const auto& s : corpus.sentences) {
    const auto labels = oracle_suffix(s, *s.gold_clauses);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) CHECK(labels[i] == s.tokens[i].nuclear);
  }
}

TEST_CASE("config validation names the field") {
  GrammarConfig cfg;
  cfg.dative_rate = 1.5;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "dative_rate");
  }
  cfg = {};
  cfg.noun_lexicon_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_clauses = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(GrammarConfig::from_json({{"unknown", 1}}), ConfigError);
  GrammarConfig d;
  d.seed = 17;
  d.dative_rate = 0.2;
  const auto back = GrammarConfig::from_json(d.to_json());
  CHECK(back.to_json() == d.to_json());
}
