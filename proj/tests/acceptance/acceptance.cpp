#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "aglab/cli.hpp"
#include "aglab/evaluation.hpp"
#include "aglab/probing.hpp"
#include "aglab/training.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aglab;
using namespace aglab::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

struct Options {
  fs::path work;
  fs::path desk_config;
  fs::path small_config;
  std::ofstream log;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(std::optional<double> v) { return format_percent(v); }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  return json::parse(in);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome check_gradient_fidelity(Options&) {
  Outcome o;
  const auto f = make_fixture(40, 17);
  std::size_t failures = 0, checked = 0;
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    const auto m = Model::initialize(dims_for(f.vocab, 12, 10, 8), seed);
    for (const auto* set : {&f.verb, &f.suffix}) {
      std::uniform_int_distribution<std::size_t> pick(0, set->size() - 1);
      const std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      while (b == a) b = pick(rng);
      const auto r = gradient_check(m, f.words, *set, {a, b});
      failures += r.failures;
      checked += r.parameters;
      worst = std::max(worst, r.max_relative_error);
      o.details.push_back("seed " + std::to_string(seed) + " " +
                          std::string(to_string(set->task)) + ": " +
                          std::to_string(r.parameters) + " parameters, max relative error " +
                          fmt("%.2e", r.max_relative_error));
    }
  }
  o.pass = failures == 0;
  o.summary = std::to_string(checked) + " parameter checks, " + std::to_string(failures) +
              " above 1e-4, max " + fmt("%.2e", worst);
  return o;
}

Outcome check_morphology_round_trip(Options&) {
  Outcome o;
  std::mt19937_64 rng(2024);
  static const std::string letters = "bdefghijklmnoprstuxz", finals = "bdlnrstz";
  std::uniform_int_distribution<int> len(1, 8);
  LemmaLexicon lex;
  std::vector<std::string> stems;
  while (stems.size() < 2000) {
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s += letters[rng() % letters.size()];
    s += finals[rng() % finals.size()];
    if (lex.contains(s)) continue;
    lex.add(s, s);
    stems.push_back(s);
  }
  std::size_t pair_ok = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto& stem = stems[rng() % stems.size()];
    const auto suffix = kSuffixClasses[rng() % kSuffixClasses.size()];
    const auto seg = segment(attach(stem, suffix), lex);
    pair_ok += seg && seg->stem == stem && seg->suffix == suffix;
  }
  o.details.push_back("segment(attach(stem, suffix)) identity on " + std::to_string(pair_ok) +
                      "/10000 pairs");

  GrammarConfig g;
  g.num_sentences = 10000;
  g.seed = 77;
  const auto corpus = generate_corpus(g);
  const auto inst = build_suffix_task(corpus.sentences, corpus.lexicon);
  std::size_t eligible = 0, recovered = 0, sentences_ok = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    std::vector<std::string> words;
    bool same = true;
    for (std::size_t j = 0; j < inst[i].input_tokens.size(); ++j) {
      const auto& orig = corpus.sentences[i].tokens[j].surface;
      std::string w = inst[i].input_tokens[j].surface;
      if (inst[i].eligible[j]) {
        ++eligible;
        w = attach(w, inst[i].labels[j]);
        recovered += w == orig;
      }
      same &= w == orig;
    }
    sentences_ok += same;
  }
  o.details.push_back("strip then recover: " + std::to_string(recovered) + "/" +
                      std::to_string(eligible) + " eligible tokens, " +
                      std::to_string(sentences_ok) + "/10000 sentence texts");
  o.pass = pair_ok == 10000 && eligible > 0 && recovered == eligible && sentences_ok == 10000;
  o.summary = o.pass ? "all pairs and eligible tokens restored" : "round-trip mismatch";
  return o;
}

Outcome check_oracle_exactness(Options&) {
  Outcome o;
  std::size_t round_trips = 0, rejected = 0, tuples = 0;
  std::set<std::string> forms;
  for (bool t : {false, true}) {
    for (auto e : kArgNumbers) {
      for (auto a : {ArgNumber::Sg, ArgNumber::Pl}) {
        for (auto d : kArgNumbers) {
          ++tuples;
          const AgreementTriple triple{e, a, d};
          if (!t && e != ArgNumber::None) {
            try {
              aux_form(t, triple);
            } catch (const InvalidInput&) {
              ++rejected;
            }
            continue;
          }
          const auto s = aux_form(t, triple);
          forms.insert(s);
          round_trips += oracle_agreement(s) == AgreementReading{t, triple};
        }
      }
    }
  }
  o.details.push_back(std::to_string(tuples) + " tuples: " + std::to_string(round_trips) +
                      " valid round-trips with " + std::to_string(forms.size()) +
                      " distinct forms, " + std::to_string(rejected) +
                      " intransitive-with-ergative rejected");

  GrammarConfig g;
  g.num_sentences = 5000;
  g.seed = 5;
  const auto corpus = generate_corpus(g);
  const auto inst = build_suffix_task(corpus.sentences, corpus.lexicon);
  std::vector<NuclearSuffix> pred, gold;
  std::vector<bool> elig;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto labels = oracle_suffix(corpus.sentences[i], *corpus.sentences[i].gold_clauses);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      pred.push_back(labels[j]);
      gold.push_back(inst[i].labels[j]);
      elig.push_back(inst[i].eligible[j]);
      mismatches += inst[i].eligible[j] && labels[j] != inst[i].labels[j];
    }
  }
  const auto m = suffix_metrics(pred, gold, elig);
  bool perfect = m.any.f1() == 1.0;
  for (auto s : kScoredSuffixes) perfect &= m[s].f1() == 1.0;
  o.details.push_back("oracle_suffix on " + std::to_string(inst.size()) +
                      " suffix-task instances: " + std::to_string(mismatches) +
                      " mismatches, macro-F1 " + pct(m.macro_f1()));
  o.pass = tuples == 36 && round_trips == 24 && forms.size() == 24 && rejected == 12 &&
           mismatches == 0 && perfect;
  o.summary = o.pass ? "aux paradigm and suffix oracle exact" : "oracle mismatch";
  return o;
}

Outcome check_metric_correctness(Options&) {
  Outcome o;
  std::size_t disagreements = 0;
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> cls(0, 5), len(1, 60), arg(0, 2);
  std::bernoulli_distribution elig(0.85);
  auto same = [&](const ClassCounts& c, const NaiveCounts& n) {
    const auto f = c.f1();
    const auto nf = naive_f1(n);
    return c.tp == n.tp && c.fp == n.fp && c.fn == n.fn && f.has_value() == nf.has_value() &&
           (!f || std::abs(*f - *nf) <= 1e-12);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<NuclearSuffix> p(n), g(n);
    std::vector<bool> e(n);
    std::vector<AgreementTriple> vp(n), vg(n);
    for (int i = 0; i < n; ++i) {
      p[i] = static_cast<NuclearSuffix>(cls(rng));
      g[i] = static_cast<NuclearSuffix>(cls(rng));
      e[i] = elig(rng);
      for (auto r : kCaseRoles) {
        vp[i][r] = static_cast<ArgNumber>(arg(rng));
        vg[i][r] = static_cast<ArgNumber>(arg(rng));
      }
    }
    const auto m = suffix_metrics(p, g, e);
    bool ok = same(m.any, naive_any(p, g, e));
    for (auto c : kScoredSuffixes) ok &= same(m[c], naive_count(p, g, e, c));
    const auto vm = verb_metrics(vp, vg);
    for (auto r : kCaseRoles) {
      std::size_t correct = 0, present = 0, found = 0;
      for (int i = 0; i < n; ++i) {
        correct += vp[i][r] == vg[i][r];
        if (vg[i][r] != ArgNumber::None) {
          ++present;
          found += vp[i][r] != ArgNumber::None;
        }
      }
      ok &= vm[r].accuracy.num == correct && vm[r].accuracy.den == static_cast<std::size_t>(n) &&
            vm[r].presence_recall.num == found && vm[r].presence_recall.den == present;
    }
    disagreements += !ok;
  }
  o.details.push_back("1000 random sets: " + std::to_string(disagreements) +
                      " disagreements with the brute-force counter");

  bool fixtures = true;
  {
    const std::vector<AgreementTriple> gold{{ArgNumber::Pl, ArgNumber::Sg, ArgNumber::None}};
    const std::vector<AgreementTriple> pred{{ArgNumber::Sg, ArgNumber::Sg, ArgNumber::None}};
    const auto v = verb_metrics(pred, gold);
    fixtures &= v[CaseRole::Ergative].accuracy.value() == 0.0 &&
                v[CaseRole::Ergative].presence_recall.value() == 1.0 &&
                v[CaseRole::Absolutive].accuracy.value() == 1.0 &&
                v[CaseRole::Dative].accuracy.value() == 1.0 &&
                !v[CaseRole::Dative].presence_recall.value() &&
                v[CaseRole::Dative].presence_recall.den == 0;
    using S = NuclearSuffix;
    const auto s = suffix_metrics(std::vector<S>{S::Ak, S::None, S::Ek, S::None},
                                  std::vector<S>{S::Ak, S::Ek, S::None, S::None},
                                  std::vector<bool>(4, true));
    fixtures &= s[S::Ak].precision() == 1.0 && s[S::Ak].recall() == 1.0 && s[S::Ak].f1() == 1.0 &&
                s[S::Ek].precision() == 0.0 && s[S::Ek].recall() == 0.0 && s[S::Ek].f1() == 0.0 &&
                s.any.precision() == 0.5 && s.any.recall() == 0.5 && s.any.f1() == 0.5;
  }
  o.details.push_back(std::string("hand fixtures (verb Pl/Sg/None, suffix 4-position) ") +
                      (fixtures ? "reproduced" : "differ"));
  o.pass = disagreements == 0 && fixtures;
  o.summary = o.pass ? "brute-force and fixtures agree" : "metric mismatch";
  return o;
}

Outcome check_overfit_sanity(Options&) {
  Outcome o;
  GrammarConfig g;
  g.num_sentences = 64;
  g.seed = 64;
  const auto corpus = generate_corpus(g);
  const auto vocab = build_vocab(corpus.sentences);
  const auto inst = build_verb_task(corpus.sentences, 64);
  WordIndex words;
  const auto set = encode_instances(inst, vocab, words);
  TrainConfig c;
  c.max_updates = 2000;
  c.eval_every = 50;
  c.patience = 40;
  c.seed = 64;
  const auto r = train(c, vocab, words, set, set);
  const auto preds = predict_verb(r.best.model, words, set);
  const auto m = verb_metrics(preds, set.verb_labels);
  double lowest = 1.0;
  for (auto role : kCaseRoles) lowest = std::min(lowest, *m[role].accuracy.value());
  o.details.push_back(std::to_string(set.size()) + " sentences, best at update " +
                      std::to_string(r.manifest.best_step) + " of " +
                      std::to_string(r.manifest.updates) + ": erg " +
                      pct(m[CaseRole::Ergative].accuracy.value()) + ", abs " +
                      pct(m[CaseRole::Absolutive].accuracy.value()) + ", dat " +
                      pct(m[CaseRole::Dative].accuracy.value()));
  o.pass = r.manifest.best_step <= 2000 && lowest >= 0.99;
  o.summary = "lowest per-role training accuracy " + pct(lowest);
  return o;
}

// ---------------------------------------------------------------------------
// Desk-scale run shared by criteria 6 to 9.

struct Desk {
  bool ready = false;
  std::string error;
  cli::ExperimentConfig config;
  fs::path root;
  std::map<std::string, json> metrics;
};

Desk& desk(Options& opt) {
  static Desk d;
  static bool attempted = false;
  if (attempted) return d;
  attempted = true;
  try {
    d.config = cli::ExperimentConfig::load(opt.desk_config);
    d.root = opt.work / "desk";
    fs::remove_all(d.root);
    std::vector<cli::Condition> conditions{
        cli::Condition::parse("verb", {}),
        cli::Condition::parse("verb", {"suffixes-only"}),
        cli::Condition::parse("verb", {"single-verb"}),
        cli::Condition::parse("suffix", {}),
        cli::Condition::parse("suffix", {"no-verb"}),
        cli::Condition::parse("suffix", {}, "word-only"),
    };
    const cli::RunDir run(d.root);
    cli::pipeline(d.config, run, conditions, opt.log);
    for (const auto& c : conditions) d.metrics[c.id()] = read_json(run.metrics_json(c));
    d.ready = true;
  } catch (const std::exception& e) {
    d.error = e.what();
  }
  return d;
}

VerbMetrics verb_of(const Desk& d, const std::string& id) {
  return verb_metrics_from_json(d.metrics.at(id).at("test"));
}
SuffixMetrics suffix_of(const Desk& d, const std::string& id) {
  return suffix_metrics_from_json(d.metrics.at(id).at("test"));
}

Outcome check_desk_learning(Options& opt) {
  Outcome o;
  auto& d = desk(opt);
  if (!d.ready) return {false, "desk run failed: " + d.error, {}};
  const auto v = verb_of(d, "verb-base");
  const auto s = suffix_of(d, "suffix-base");
  const double erg = *v[CaseRole::Ergative].accuracy.value();
  const double abs = *v[CaseRole::Absolutive].accuracy.value();
  const double f1 = s.macro_f1().value_or(0.0);
  o.details.push_back(std::to_string(d.config.grammar.num_sentences) +
                      " sentences; verb test instances " + std::to_string(v.instances));
  o.pass = abs >= 0.90 && erg >= 0.80 && f1 >= 0.75;
  o.summary = "abs " + pct(abs) + " (>= 90), erg " + pct(erg) + " (>= 80), suffix macro-F1 " +
              pct(f1) + " (>= 75)";
  return o;
}

Outcome check_trends(Options& opt) {
  Outcome o;
  auto& d = desk(opt);
  if (!d.ready) return {false, "desk run failed: " + d.error, {}};
  const auto base = verb_of(d, "verb-base");
  const auto only = verb_of(d, "verb-suffixes-only");
  const auto single = verb_of(d, "verb-single-verb");
  auto acc = [](const VerbMetrics& m, CaseRole r) { return 100.0 * *m[r].accuracy.value(); };

  const double gap_a = acc(base, CaseRole::Ergative) - acc(only, CaseRole::Ergative);
  const bool a = gap_a > 1.0;
  o.details.push_back(std::string(a ? "(a) pass" : "(a) fail") + ": erg suffixes-only " +
                      fmt("%.1f", acc(only, CaseRole::Ergative)) + " < base " +
                      fmt("%.1f", acc(base, CaseRole::Ergative)) + ", gap " + fmt("%.2f", gap_a));

  bool no_role_worse = true;
  std::string roles;
  for (auto r : kCaseRoles) {
    const double gap = acc(single, r) - acc(base, r);
    no_role_worse &= gap >= 0.0;
    roles += " " + std::string(to_string(r)) + " " + fmt("%.1f", acc(single, r)) + " vs " +
             fmt("%.1f", acc(base, r)) + " (" + fmt("%+.2f", gap) + ")";
  }
  const double gap_b = acc(single, CaseRole::Ergative) - acc(base, CaseRole::Ergative);
  const bool b = no_role_worse && gap_b > 1.0;
  o.details.push_back(std::string(b ? "(b) pass" : "(b) fail") +
                      ": single-verb vs base per role:" + roles + "; ergative gap must exceed 1");

  const double f_base = 100.0 * suffix_of(d, "suffix-base").macro_f1().value_or(0.0);
  const double f_nov = 100.0 * suffix_of(d, "suffix-no-verb").macro_f1().value_or(0.0);
  const double f_word = 100.0 * suffix_of(d, "suffix-base.word-only").macro_f1().value_or(0.0);
  const bool c = f_nov - f_word > 1.0 && f_base - f_nov > 1.0;
  o.details.push_back(std::string(c ? "(c) pass" : "(c) fail") + ": macro-F1 word-only " +
                      fmt("%.1f", f_word) + " < no-verb " + fmt("%.1f", f_nov) + " < base " +
                      fmt("%.1f", f_base));
  o.pass = a && b && c;
  o.summary = std::string("(a) ") + (a ? "pass" : "fail") + ", (b) " + (b ? "pass" : "fail") +
              ", (c) " + (c ? "pass" : "fail");
  return o;
}

Outcome check_closest_verb(Options& opt) {
  Outcome o;
  auto& d = desk(opt);
  if (!d.ready) return {false, "desk run failed: " + d.error, {}};
  const cli::RunDir run(d.root);
  const auto vocab = Vocab::read_tsv(run.vocab());
  const auto lexicon = LemmaLexicon::read_tsv(run.lexicon());
  const auto checkpoint = load_checkpoint(run.checkpoint(cli::Condition::parse("suffix", {})),
                                          vocab.hash());
  std::vector<Sentence> two;
  for (auto& s : read_corpus_jsonl(run.split("test"))) {
    if (s.gold_clauses && s.gold_clauses->size() >= 2) two.push_back(std::move(s));
  }
  const auto inst = build_suffix_task(two, lexicon);
  const auto preds = predict_suffix(checkpoint, vocab, inst);
  const auto r = closest_verb_split(inst, preds);
  o.pass = !two.empty();
  for (auto s : {NuclearSuffix::Ak, NuclearSuffix::Ek}) {
    const auto& good = r.at(Partition::ClosestCorrect, s);
    const auto& bad = r.at(Partition::ClosestIncorrect, s);
    const bool ok = good.f1() && bad.f1() && *good.f1() >= *bad.f1();
    o.pass &= ok;
    o.details.push_back("-" + std::string(suffix_string(s)) + ": closest-correct F1 " +
                        pct(good.f1()) + " (n=" + std::to_string(good.support()) +
                        ") vs closest-incorrect " + pct(bad.f1()) + " (n=" +
                        std::to_string(bad.support()) + ")");
  }
  o.summary = std::to_string(two.size()) + " two-clause test sentences, " +
              std::to_string(r.positions[1]) + " closest-incorrect positions";
  return o;
}

// Independent recount of the selector and label of one probe over raw sentences.
std::pair<std::size_t, std::size_t> recount_majority(std::span<const Sentence> sentences,
                                                     Selector selector, ProbeLabel label,
                                                     const std::vector<std::string>& known) {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      bool take = false;
      switch (selector) {
        case Selector::NuclearSuffixed: take = !t.is_verb && t.nuclear != NuclearSuffix::None; break;
        case Selector::AkSuffixed: take = t.nuclear == NuclearSuffix::Ak; break;
        case Selector::SuffixEligible: take = !t.is_verb; break;
        case Selector::AllTokens: take = true; break;
      }
      if (!take) continue;
      const auto name = probe_label(s, i, label);
      if (std::find(known.begin(), known.end(), name) == known.end()) continue;
      ++counts[name];
      ++total;
    }
  }
  std::size_t best = 0;
  for (const auto& [name, n] : counts) best = std::max(best, n);
  return {best, total};
}

Outcome check_probing_identities(Options& opt) {
  Outcome o;
  auto& d = desk(opt);
  if (!d.ready) return {false, "desk run failed: " + d.error, {}};
  const cli::RunDir run(d.root);
  cli::ProbeSources sources;
  sources.condition = cli::Condition::parse("suffix", {});
  const auto report = cli::probe(d.config, run, sources, opt.log);
  const auto test = read_corpus_jsonl(run.split("test"));

  std::size_t reports = 0, identity = 0, majority_ok = 0, floor_ok = 0, floors = 0;
  auto check = [&](const json& r, Selector sel, ProbeLabel label,
                   const std::vector<std::string>& names, const std::string& what) {
    ++reports;
    const auto& t = r.at("total");
    const auto& c = r.at("main_model_correct");
    const auto& w = r.at("main_model_wrong");
    const auto count = [](const json& a, const char* k) { return a.at(k).get<std::size_t>(); };
    const bool id = count(t, "count") == count(c, "count") + count(w, "count") &&
                    count(t, "correct") == count(c, "correct") + count(w, "correct");
    identity += id;
    const auto [best, total] = recount_majority(test, sel, label, names);
    const bool maj = count(r.at("majority"), "correct") == best &&
                     count(r.at("majority"), "count") == total && total == count(t, "count");
    majority_ok += maj;
    o.details.push_back(what + ": identity " + (id ? "holds" : "fails") + ", majority " +
                        std::to_string(count(r.at("majority"), "correct")) + "/" +
                        std::to_string(count(r.at("majority"), "count")) + " vs recount " +
                        std::to_string(best) + "/" + std::to_string(total));
  };
  auto floor = [&](const json& row) {
    ++floors;
    floor_ok += row.at("selected_dev_accuracy").get<double>() >=
                row.at("majority_dev_accuracy").get<double>();
  };
  const auto& diff = report.at("differential");
  const auto labels = diff.value("labels", std::vector<std::string>{});
  for (const auto& row : diff.value("rows", json::array())) {
    check(row, Selector::NuclearSuffixed, ProbeLabel::ClosestVerb, labels,
          "closest-verb " + row.at("arch").get<std::string>());
    floor(row);
  }
  for (const auto& row : report.at("generalization")) {
    if (!row.contains("report")) continue;
    check(row.at("report"), *parse_selector(row.at("selector").get<std::string>()),
          *parse_probe_label(row.at("label").get<std::string>()),
          row.at("labels").get<std::vector<std::string>>(), row.at("property").get<std::string>());
    floor(row);
  }
  o.pass = reports > 0 && identity == reports && majority_ok == reports && floor_ok == floors;
  o.summary = std::to_string(reports) + " reports: identity " + std::to_string(identity) +
              ", majority recount " + std::to_string(majority_ok) + ", selection floor " +
              std::to_string(floor_ok) + "/" + std::to_string(floors);
  return o;
}

Outcome check_determinism(Options& opt) {
  Outcome o;
  const auto config = cli::ExperimentConfig::load(opt.small_config);
  std::vector<cli::Condition> grid = cli::verb_grid();
  for (const auto& c : cli::suffix_grid()) grid.push_back(c);
  std::array<fs::path, 2> roots{opt.work / "determinism-a", opt.work / "determinism-b"};
  for (const auto& r : roots) {
    fs::remove_all(r);
    cli::pipeline(config, cli::RunDir(r), grid, opt.log);
  }
  std::size_t files = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(roots[0] / "metrics")) {
    if (entry.path().extension() != ".json") continue;
    ++files;
    const auto other = roots[1] / "metrics" / entry.path().filename();
    identical += fs::exists(other) && read_bytes(entry.path()) == read_bytes(other);
  }
  o.pass = files == grid.size() && identical == files;
  o.summary = std::to_string(identical) + "/" + std::to_string(files) +
              " metrics JSON files byte-identical across two pipeline runs";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Options opt;
  std::string work = "acceptance-work";
  std::string desk_config = std::string(AGLAB_SOURCE_DIR) + "/configs/desk.json";
  std::string small_config = std::string(AGLAB_SOURCE_DIR) + "/configs/small.json";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for pipeline runs");
  app.add_option("--desk-config", desk_config);
  app.add_option("--small-config", small_config);
  app.add_option("--criteria", only, "Subset of criteria to run")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  opt.work = fs::absolute(work);
  opt.desk_config = desk_config;
  opt.small_config = small_config;
  fs::create_directories(opt.work);
  opt.log.open(opt.work / "acceptance.log");

  const std::vector<std::pair<std::string, std::function<Outcome(Options&)>>> criteria{
      {"gradient fidelity", check_gradient_fidelity},
      {"morphology round-trip", check_morphology_round_trip},
      {"oracle exactness", check_oracle_exactness},
      {"metric correctness", check_metric_correctness},
      {"overfit sanity", check_overfit_sanity},
      {"desk-scale learning", check_desk_learning},
      {"qualitative trends", check_trends},
      {"closest-verb split", check_closest_verb},
      {"probing identities", check_probing_identities},
      {"determinism", check_determinism},
  };
  std::size_t run = 0, passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second(opt);
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what(), {}};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& line : out.details) std::cout << "    " << line << "\n";
    std::cout << (out.pass ? "PASS" : "FAIL") << "  criterion " << n << " " << criteria[i].first
              << ": " << out.summary << " [" << fmt("%.1f", secs) << " s]" << std::endl;
    ++run;
    passed += out.pass;
  }
  std::cout << passed << "/" << run << " criteria passed" << std::endl;
  return passed == run ? 0 : 1;
}
