#include "aglab/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "aglab/parallel.hpp"

namespace aglab {

using nlohmann::json;

// ----------------------------------------------------------------------------
// Config
// ----------------------------------------------------------------------------

void GrammarConfig::validate() const {
  auto ratio = [](const char* field, double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(field, "must be a ratio in [0,1], got " + std::to_string(v));
    }
  };
  ratio("a_final_lemma_fraction", a_final_lemma_fraction);
  ratio("dative_rate", dative_rate);
  ratio("ergative_omission_rate", ergative_omission_rate);
  ratio("transitive_rate", transitive_rate);
  ratio("multi_clause_rate", multi_clause_rate);
  ratio("adjective_rate", adjective_rate);
  ratio("adverb_rate", adverb_rate);
  ratio("role_bias", role_bias);
  ratio("embed_rate", embed_rate);
  ratio("interleave_rate", interleave_rate);
  ratio("nonfinite_rate", nonfinite_rate);
  if (noun_lexicon_size < 2) throw ConfigError("noun_lexicon_size", "must be >= 2");
  if (max_clauses < 1) throw ConfigError("max_clauses", "must be >= 1");
  if (num_sentences < 1) throw ConfigError("num_sentences", "must be >= 1");
}

json GrammarConfig::to_json() const {
  return json{{"num_sentences", num_sentences},
              {"noun_lexicon_size", noun_lexicon_size},
              {"a_final_lemma_fraction", a_final_lemma_fraction},
              {"dative_rate", dative_rate},
              {"ergative_omission_rate", ergative_omission_rate},
              {"transitive_rate", transitive_rate},
              {"multi_clause_rate", multi_clause_rate},
              {"max_clauses", max_clauses},
              {"word_order_shuffle", word_order_shuffle},
              {"adjective_rate", adjective_rate},
              {"adverb_rate", adverb_rate},
              {"role_bias", role_bias},
              {"embed_rate", embed_rate},
              {"interleave_rate", interleave_rate},
              {"nonfinite_rate", nonfinite_rate},
              {"seed", seed}};
}

GrammarConfig GrammarConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("grammar", "must be an object");
  GrammarConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "num_sentences") c.num_sentences = value.get<std::size_t>();
      else if (key == "noun_lexicon_size") c.noun_lexicon_size = value.get<std::size_t>();
      else if (key == "a_final_lemma_fraction") c.a_final_lemma_fraction = value.get<double>();
      else if (key == "dative_rate") c.dative_rate = value.get<double>();
      else if (key == "ergative_omission_rate") c.ergative_omission_rate = value.get<double>();
      else if (key == "transitive_rate") c.transitive_rate = value.get<double>();
      else if (key == "multi_clause_rate") c.multi_clause_rate = value.get<double>();
      else if (key == "max_clauses") c.max_clauses = value.get<std::size_t>();
      else if (key == "word_order_shuffle") c.word_order_shuffle = value.get<bool>();
      else if (key == "adjective_rate") c.adjective_rate = value.get<double>();
      else if (key == "adverb_rate") c.adverb_rate = value.get<double>();
      else if (key == "role_bias") c.role_bias = value.get<double>();
      else if (key == "embed_rate") c.embed_rate = value.get<double>();
      else if (key == "interleave_rate") c.interleave_rate = value.get<double>();
      else if (key == "nonfinite_rate") c.nonfinite_rate = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError(key, "unknown grammar key");
    } catch (const json::exception& e) {
      throw ConfigError(key, std::string("wrong type: ") + e.what());
    }
  }
  c.validate();
  return c;
}

// ----------------------------------------------------------------------------
// Auxiliary paradigm
//
// surface = base + absolutive + dative + ergative segment, where each
// segment starts with a letter no other segment in that slot can start with,
// so the form parses left to right in exactly one way.
// ----------------------------------------------------------------------------

bool is_valid_agreement(bool transitive, const AgreementTriple& t) {
  if (t.abs == ArgNumber::None) return false;
  if (!transitive && t.erg != ArgNumber::None) return false;
  return true;
}

std::string aux_form(bool transitive, const AgreementTriple& t) {
  if (!is_valid_agreement(transitive, t)) {
    throw InvalidInput("aux_form: invalid agreement " + to_string(t) +
                       (transitive ? " (transitive)" : " (intransitive)"));
  }
  std::string out = transitive ? "dit" : "dau";
  if (t.abs == ArgNumber::Pl) out += "zki";
  if (t.dat == ArgNumber::Sg) out += "o";
  if (t.dat == ArgNumber::Pl) out += "e";
  if (t.erg == ArgNumber::Sg) out += "n";
  if (t.erg == ArgNumber::Pl) out += "te";
  return out;
}

std::vector<AgreementReading> all_valid_agreements() {
  std::vector<AgreementReading> out;
  for (bool transitive : {true, false}) {
    for (ArgNumber erg : kArgNumbers) {
      for (ArgNumber abs : kArgNumbers) {
        for (ArgNumber dat : kArgNumbers) {
          AgreementTriple t{erg, abs, dat};
          if (is_valid_agreement(transitive, t)) out.push_back({transitive, t});
        }
      }
    }
  }
  return out;
}

namespace {

const std::map<std::string, AgreementReading, std::less<>>& aux_table() {
  static const auto table = [] {
    std::map<std::string, AgreementReading, std::less<>> m;
    for (const auto& r : all_valid_agreements()) m.emplace(aux_form(r.transitive, r.triple), r);
    return m;
  }();
  return table;
}

}  // namespace

AgreementReading oracle_agreement(std::string_view aux_surface) {
  const auto& table = aux_table();
  auto it = table.find(aux_surface);
  if (it == table.end()) {
    throw LookupError("oracle_agreement: unknown auxiliary form '" + std::string(aux_surface) +
                      "'");
  }
  return it->second;
}

bool is_aux_form(std::string_view surface) {
  return aux_table().find(surface) != aux_table().end();
}

// ----------------------------------------------------------------------------
// Lexicon
// ----------------------------------------------------------------------------

namespace {

enum NounClass : int { kAgentive = 0, kTheme = 1, kRecipient = 2 };

struct Vocabulary {
  std::vector<std::string> nouns;
  std::array<std::vector<int>, 3> nouns_by_class;
  std::vector<std::string> adjectives;
  std::vector<std::string> transitive_verbs;
  std::vector<std::string> intransitive_verbs;
  std::vector<std::string> adverbs{"hemen", "gaur", "orain", "bihar", "beti", "oso", "atzo"};
  std::vector<std::string> conjunctions{"eta", "baina"};
  LemmaLexicon lexicon;
};

constexpr std::array<std::string_view, 15> kOnsets{"b", "d", "g", "k", "l", "m", "n", "r",
                                                   "s", "t", "z", "x", "tx", "tz", "h"};
constexpr std::array<char, 4> kInnerVowels{'e', 'i', 'o', 'u'};
constexpr std::array<std::string_view, 7> kCodas{"n", "r", "l", "z", "tz", "t", "s"};
constexpr std::array<std::string_view, 3> kOpenFinals{"o", "u", "e"};

std::string nonfinite_form(const std::string& verb) { return verb + "tzeko"; }

class StemFactory {
 public:
  explicit StemFactory(std::uint64_t seed) : rng_(seed) {}

  /// A stem whose every suffixed surface is new and segments back to it.
  std::string next(bool a_final, bool suffixable) {
    for (;;) {
      std::string s = draw(a_final);
      if (accept(s, suffixable)) return s;
    }
  }

  void reserve(const std::string& word) { surfaces_.insert(word); }

 private:
  std::string draw(bool a_final) {
    std::uniform_int_distribution<int> syllables(2, 3);
    std::uniform_int_distribution<std::size_t> onset(0, kOnsets.size() - 1);
    std::uniform_int_distribution<int> vowel(0, 4);
    const int n = syllables(rng_);
    std::string s;
    for (int i = 0; i < n; ++i) {
      if (i > 0 || std::bernoulli_distribution(0.7)(rng_)) s += kOnsets[onset(rng_)];
      const int v = vowel(rng_);
      s += v == 4 ? 'a' : kInnerVowels[v];
    }
    if (a_final) {
      s.back() = 'a';
      return s;
    }
    if (std::bernoulli_distribution(0.6)(rng_)) {
      s += kCodas[std::uniform_int_distribution<std::size_t>(0, kCodas.size() - 1)(rng_)];
    } else {
      s.back() = kOpenFinals[std::uniform_int_distribution<std::size_t>(0, 2)(rng_)][0];
    }
    return s;
  }

  bool accept(const std::string& s, bool suffixable) {
    std::vector<std::string> forms;
    if (suffixable) {
      for (NuclearSuffix x : kSuffixClasses) forms.push_back(attach(s, x));
    } else {
      forms.push_back(s);
    }
    for (const auto& f : forms) {
      if (surfaces_.count(f)) return false;
    }
    surfaces_.insert(forms.begin(), forms.end());
    return true;
  }

  std::mt19937_64 rng_;
  std::unordered_set<std::string> surfaces_;
};

Vocabulary build_vocabulary(const GrammarConfig& cfg) {
  Vocabulary v;
  StemFactory factory(derive_seed(cfg.seed, "lexicon"));
  for (const auto& w : v.adverbs) factory.reserve(w);
  for (const auto& w : v.conjunctions) factory.reserve(w);
  for (const auto& r : all_valid_agreements()) factory.reserve(aux_form(r.transitive, r.triple));
  factory.reserve("izan");
  factory.reserve("ukan");

  // Nouns are split into three near-equal classes, each with the configured
  // share of -a-final lemmas.
  const std::size_t n = cfg.noun_lexicon_size;
  std::vector<NounClass> classes(n);
  for (std::size_t i = 0; i < n; ++i) classes[i] = static_cast<NounClass>(i % 3);
  std::array<std::size_t, 3> class_size{};
  for (auto c : classes) ++class_size[c];
  std::array<std::size_t, 3> a_final_quota{};
  for (int c = 0; c < 3; ++c) {
    a_final_quota[c] = static_cast<std::size_t>(
        std::llround(cfg.a_final_lemma_fraction * static_cast<double>(class_size[c])));
  }
  std::array<std::size_t, 3> seen{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = classes[i];
    const bool a_final = seen[c] < a_final_quota[c];
    ++seen[c];
    v.nouns.push_back(factory.next(a_final, true));
    v.nouns_by_class[c].push_back(static_cast<int>(i));
  }

  const std::size_t n_adj = std::max<std::size_t>(8, n / 10);
  for (std::size_t i = 0; i < n_adj; ++i) v.adjectives.push_back(factory.next(false, true));
  for (int i = 0; i < 24; ++i) v.transitive_verbs.push_back(factory.next(false, false));
  for (int i = 0; i < 16; ++i) v.intransitive_verbs.push_back(factory.next(false, false));
  for (const auto* verbs : {&v.transitive_verbs, &v.intransitive_verbs}) {
    for (const auto& w : *verbs) factory.reserve(nonfinite_form(w));
  }

  for (const auto& w : v.nouns) v.lexicon.add(w, w);
  for (const auto& w : v.adjectives) v.lexicon.add(w, w);
  for (const auto& w : v.transitive_verbs) v.lexicon.add(w, w);
  for (const auto& w : v.intransitive_verbs) v.lexicon.add(w, w);
  for (const auto& w : v.adverbs) v.lexicon.add(w, w);
  for (const auto& w : v.conjunctions) v.lexicon.add(w, w);
  return v;
}

// ----------------------------------------------------------------------------
// Sentence generation
// ----------------------------------------------------------------------------

enum class PieceKind { Noun, Adjective, MainVerb, Aux, Adverb, Conjunction };

struct Piece {
  PieceKind kind;
  std::string surface;
  std::string lemma;
  int clause = 0;
  int np = -1;  // index of the argument within its clause
  bool np_final = false;
  CaseRole role = CaseRole::Absolutive;
  NumberTag number = NumberTag::Singular;
};

using Unit = std::vector<Piece>;

struct ClausePlan {
  bool transitive = false;
  bool finite = true;
  AgreementTriple agreement;
  std::optional<NumberTag> dropped_ergative;
  std::vector<std::pair<CaseRole, NumberTag>> arguments;
};

class SentenceBuilder {
 public:
  SentenceBuilder(const GrammarConfig& cfg, const Vocabulary& vocab, std::uint64_t seed)
      : cfg_(cfg), vocab_(vocab), rng_(seed) {}

  Sentence build(std::string id) {
    std::size_t n_clauses = 1;
    if (cfg_.max_clauses >= 2 && coin(cfg_.multi_clause_rate)) {
      n_clauses = std::uniform_int_distribution<std::size_t>(2, cfg_.max_clauses)(rng_);
    }
    const bool has_dative = coin(cfg_.dative_rate);
    const std::size_t dative_clause =
        std::uniform_int_distribution<std::size_t>(0, n_clauses - 1)(rng_);

    std::vector<ClausePlan> plans;
    for (std::size_t c = 0; c < n_clauses; ++c) {
      plans.push_back(plan_clause(has_dative && c == dative_clause));
      if (c > 0) plans.back().finite = !coin(cfg_.nonfinite_rate);
    }

    // Clause 0 is the matrix clause. Others are interleaved with it, embedded
    // as a block inside it, or coordinated after it.
    std::vector<Unit> matrix = clause_units(plans[0], 0);
    std::vector<Unit> tail;
    for (std::size_t c = 1; c < n_clauses; ++c) {
      auto units = clause_units(plans[c], static_cast<int>(c));
      if (coin(cfg_.interleave_rate)) {
        matrix = interleave(std::move(matrix), std::move(units));
        continue;
      }
      Unit block;
      for (auto& u : units) block.insert(block.end(), u.begin(), u.end());
      if (matrix.size() >= 2 && coin(cfg_.embed_rate)) {
        const auto at =
            std::uniform_int_distribution<std::size_t>(1, matrix.size() - 1)(rng_);
        matrix.insert(matrix.begin() + static_cast<std::ptrdiff_t>(at), std::move(block));
      } else {
        const auto& conj = vocab_.conjunctions[std::uniform_int_distribution<std::size_t>(
            0, vocab_.conjunctions.size() - 1)(rng_)];
        Unit joined{Piece{PieceKind::Conjunction, conj, conj, static_cast<int>(c)}};
        joined.insert(joined.end(), block.begin(), block.end());
        tail.push_back(std::move(joined));
      }
    }
    std::vector<Piece> pieces;
    for (auto& u : matrix) pieces.insert(pieces.end(), u.begin(), u.end());
    for (auto& u : tail) pieces.insert(pieces.end(), u.begin(), u.end());
    return assemble(std::move(id), pieces, plans);
  }

 private:
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  NumberTag number() { return coin(0.5) ? NumberTag::Plural : NumberTag::Singular; }

  template <class V>
  const auto& pick(const V& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
  }

  /// Uniformly random merge that keeps the order inside each sequence.
  std::vector<Unit> interleave(std::vector<Unit> a, std::vector<Unit> b) {
    std::vector<Unit> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      const std::size_t left_a = a.size() - i;
      const std::size_t left_b = b.size() - j;
      const bool take_a = std::uniform_int_distribution<std::size_t>(1, left_a + left_b)(rng_) <= left_a;
      out.push_back(std::move(take_a ? a[i++] : b[j++]));
    }
    return out;
  }

  ClausePlan plan_clause(bool with_dative) {
    ClausePlan p;
    p.transitive = coin(cfg_.transitive_rate);
    const NumberTag abs = number();
    p.agreement.abs = to_arg_number(abs);
    if (p.transitive) {
      const NumberTag erg = number();
      p.agreement.erg = to_arg_number(erg);
      if (coin(cfg_.ergative_omission_rate)) {
        p.dropped_ergative = erg;
      } else {
        p.arguments.emplace_back(CaseRole::Ergative, erg);
      }
    }
    if (with_dative) {
      const NumberTag dat = number();
      p.agreement.dat = to_arg_number(dat);
      p.arguments.emplace_back(CaseRole::Dative, dat);
    }
    p.arguments.emplace_back(CaseRole::Absolutive, abs);
    return p;
  }

  const std::string& noun_for(CaseRole role, bool transitive) {
    // Intransitive subjects carry no lexical preference.
    if (role == CaseRole::Absolutive && !transitive) return pick(vocab_.nouns);
    if (coin(cfg_.role_bias)) {
      const int cls = role == CaseRole::Ergative ? kAgentive
                      : role == CaseRole::Dative ? kRecipient
                                                 : kTheme;
      return vocab_.nouns[pick(vocab_.nouns_by_class[cls])];
    }
    return pick(vocab_.nouns);
  }

  std::vector<Unit> clause_units(const ClausePlan& plan, int clause) {
    std::vector<Unit> units;
    int np = 0;
    for (const auto& [role, num] : plan.arguments) {
      const auto& noun = noun_for(role, plan.transitive);
      Unit u;
      Piece head{PieceKind::Noun, noun, noun, clause, np, true, role, num};
      if (coin(cfg_.adjective_rate)) {
        head.np_final = false;
        const auto& adj = pick(vocab_.adjectives);
        u.push_back(head);
        u.push_back(Piece{PieceKind::Adjective, adj, adj, clause, np, true, role, num});
      } else {
        u.push_back(head);
      }
      units.push_back(std::move(u));
      ++np;
    }
    if (coin(cfg_.adverb_rate)) {
      const auto& adv = pick(vocab_.adverbs);
      const auto at = std::uniform_int_distribution<std::size_t>(0, units.size())(rng_);
      units.insert(units.begin() + static_cast<std::ptrdiff_t>(at),
                   Unit{Piece{PieceKind::Adverb, adv, adv, clause}});
    }
    if (cfg_.word_order_shuffle) std::shuffle(units.begin(), units.end(), rng_);

    const auto& verb =
        plan.transitive ? pick(vocab_.transitive_verbs) : pick(vocab_.intransitive_verbs);
    Unit verb_complex;
    if (plan.finite) {
      verb_complex = {Piece{PieceKind::MainVerb, verb, verb, clause},
                      Piece{PieceKind::Aux, aux_form(plan.transitive, plan.agreement),
                            plan.transitive ? "ukan" : "izan", clause}};
    } else {
      verb_complex = {Piece{PieceKind::MainVerb, nonfinite_form(verb), verb, clause}};
    }
    if (cfg_.word_order_shuffle) {
      const auto at = std::uniform_int_distribution<std::size_t>(0, units.size())(rng_);
      units.insert(units.begin() + static_cast<std::ptrdiff_t>(at), std::move(verb_complex));
    } else {
      units.push_back(std::move(verb_complex));
    }
    return units;
  }

  static std::string_view role_dep(CaseRole role, bool transitive) {
    switch (role) {
      case CaseRole::Ergative: return "nsubj";
      case CaseRole::Absolutive: return transitive ? "obj" : "nsubj";
      case CaseRole::Dative: return "iobj";
    }
    return "dep";
  }

  static std::string_view case_tag(CaseRole role) {
    switch (role) {
      case CaseRole::Ergative: return "Erg";
      case CaseRole::Absolutive: return "Abs";
      case CaseRole::Dative: return "Dat";
    }
    return "none";
  }

  Sentence assemble(std::string id, const std::vector<Piece>& pieces,
                    const std::vector<ClausePlan>& plans) {
    Sentence s;
    s.id = std::move(id);
    std::vector<GoldClause> clauses(plans.size());
    std::vector<int> main_verb(plans.size(), -1);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const auto& p = pieces[i];
      if (p.kind == PieceKind::MainVerb) main_verb[p.clause] = static_cast<int>(i);
      if (p.kind == PieceKind::Aux) clauses[p.clause].verb_index = static_cast<int>(i);
    }
    // Head of each NP (1-based position of its noun), keyed by (clause, np).
    std::map<std::pair<int, int>, int> np_head;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (pieces[i].kind == PieceKind::Noun) {
        np_head[{pieces[i].clause, pieces[i].np}] = static_cast<int>(i) + 1;
      }
    }
    auto next_main_verb = [&](std::size_t from) {
      for (std::size_t j = from; j < pieces.size(); ++j) {
        if (pieces[j].kind == PieceKind::MainVerb) return static_cast<int>(j) + 1;
      }
      return 0;
    };

    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const auto& p = pieces[i];
      const auto& plan = plans[p.clause];
      const int mv = main_verb[p.clause] + 1;
      Token t;
      t.lemma = p.lemma;
      t.case_tag = "none";
      switch (p.kind) {
        case PieceKind::Noun:
        case PieceKind::Adjective: {
          t.pos = p.kind == PieceKind::Noun ? "NOUN" : "ADJ";
          if (p.np_final) {
            t.nuclear = case_number_to_suffix(p.role, p.number);
            t.surface = attach(p.surface, t.nuclear);
            t.gold_case = p.role;
            t.gold_number = p.number;
            t.case_tag = std::string(case_tag(p.role));
            clauses[p.clause].argument_attachments.push_back(
                Attachment{static_cast<int>(i), p.role, p.number});
          } else {
            t.surface = p.surface;
          }
          if (p.kind == PieceKind::Noun) {
            t.dep_label = std::string(role_dep(p.role, plan.transitive));
            t.head = mv;
          } else {
            t.dep_label = "amod";
            t.head = np_head.at({p.clause, p.np});
          }
          break;
        }
        case PieceKind::MainVerb:
          t.surface = p.surface;
          t.is_verb = true;
          t.pos = "VERB";
          if (p.clause == 0) {
            t.dep_label = "root";
            t.head = 0;
          } else if (!plan.finite) {
            t.dep_label = "advcl";
            t.head = main_verb[0] + 1;
          } else {
            t.dep_label = "conj";
            t.head = main_verb[0] + 1;
          }
          break;
        case PieceKind::Aux:
          t.surface = p.surface;
          t.is_verb = true;
          t.is_auxiliary = true;
          t.pos = "AUX";
          t.dep_label = "aux";
          t.head = mv;
          break;
        case PieceKind::Adverb:
          t.surface = p.surface;
          t.pos = "ADV";
          t.dep_label = "advmod";
          t.head = mv;
          break;
        case PieceKind::Conjunction:
          t.surface = p.surface;
          t.pos = "CCONJ";
          t.dep_label = "cc";
          t.head = next_main_verb(i + 1);
          break;
      }
      s.tokens.push_back(std::move(t));
    }
    for (std::size_t c = 0; c < plans.size(); ++c) {
      clauses[c].main_verb_index = main_verb[c];
      clauses[c].finite = plans[c].finite;
      if (!plans[c].finite) {
        clauses[c].verb_index = main_verb[c];
        clauses[c].main_verb_index = -1;
      }
      clauses[c].transitive = plans[c].transitive;
      clauses[c].dropped_ergative = plans[c].dropped_ergative;
    }
    s.gold_clauses = std::move(clauses);
    return s;
  }

  const GrammarConfig& cfg_;
  const Vocabulary& vocab_;
  std::mt19937_64 rng_;
};

}  // namespace

LemmaLexicon synthetic_lexicon(const GrammarConfig& config) {
  config.validate();
  return build_vocabulary(config).lexicon;
}

GeneratedCorpus generate_corpus(const GrammarConfig& config, unsigned workers) {
  config.validate();
  Vocabulary vocab = build_vocabulary(config);
  GeneratedCorpus out;
  out.sentences.resize(config.num_sentences);
  const std::uint64_t sentence_seed = derive_seed(config.seed, "sentences");
  parallel_for(config.num_sentences, workers, [&](std::size_t i) {
    SentenceBuilder builder(config, vocab, derive_seed(sentence_seed, i));
    out.sentences[i] = builder.build("syn-" + std::to_string(i));
  });
  out.lexicon = std::move(vocab.lexicon);
  return out;
}

std::vector<NuclearSuffix> oracle_suffix(const Sentence& sentence,
                                         std::span<const GoldClause> clauses) {
  std::vector<NuclearSuffix> labels(sentence.tokens.size(), NuclearSuffix::None);
  for (const auto& c : clauses) {
    for (const auto& a : c.argument_attachments) {
      if (a.position < 0 || a.position >= static_cast<int>(labels.size())) {
        throw InvalidInput("oracle_suffix: attachment out of range in " + sentence.id);
      }
      if (sentence.tokens[a.position].is_verb) {
        throw InvalidInput("oracle_suffix: argument attached to verb token in " + sentence.id);
      }
      labels[a.position] = case_number_to_suffix(a.role, a.number);
    }
  }
  return labels;
}

json CorpusStats::to_json() const {
  return json{{"sentences", sentences},
              {"tokens", tokens},
              {"clauses", clauses},
              {"dative_rate", dative_rate},
              {"ergative_omission_rate", ergative_omission_rate},
              {"ak_density", ak_density},
              {"a_final_lemma_rate", a_final_lemma_rate},
              {"multi_clause_rate", multi_clause_rate}};
}

CorpusStats compute_stats(std::span<const Sentence> sentences) {
  CorpusStats st;
  std::size_t with_dative = 0, transitive = 0, dropped = 0, ak = 0, nouns = 0, a_final = 0,
              multi = 0;
  for (const auto& s : sentences) {
    ++st.sentences;
    st.tokens += s.tokens.size();
    bool dative = false;
    for (const auto& t : s.tokens) {
      if (t.gold_case == CaseRole::Dative) dative = true;
      if (t.nuclear == NuclearSuffix::Ak) ++ak;
      if (t.pos && *t.pos == "NOUN") {
        ++nouns;
        if (!t.lemma.empty() && t.lemma.back() == 'a') ++a_final;
      }
    }
    with_dative += dative ? 1 : 0;
    if (s.gold_clauses) {
      st.clauses += s.gold_clauses->size();
      multi += s.gold_clauses->size() > 1 ? 1 : 0;
      for (const auto& c : *s.gold_clauses) {
        if (c.transitive) {
          ++transitive;
          dropped += c.dropped_ergative ? 1 : 0;
        }
      }
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  st.dative_rate = ratio(with_dative, st.sentences);
  st.ergative_omission_rate = ratio(dropped, transitive);
  st.ak_density = ratio(ak, st.tokens);
  st.a_final_lemma_rate = ratio(a_final, nouns);
  st.multi_clause_rate = ratio(multi, st.sentences);
  return st;
}

}  // namespace aglab
