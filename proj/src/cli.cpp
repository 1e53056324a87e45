#include "aglab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

namespace aglab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ----------------------------------------------------------------------------
// Config
// ----------------------------------------------------------------------------

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Runs a section parser, prefixing the field name of any ConfigError.
template <class F>
auto section(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(name + "." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
}

void reject_keys(const json& j, const std::string& name, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (j.contains(k)) {
      throw ConfigError(name + "." + k, "not settable here; it comes from the run");
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
  section("grammar", [&] { grammar.validate(); return 0; });
  section("split", [&] { split.validate(); return 0; });
  if (vocab_cap < 1) throw ConfigError("vocab_cap", "must be positive");
  if (corpus.has_value() != lexicon.has_value()) {
    throw ConfigError(corpus ? "lexicon" : "corpus", "corpus and lexicon go together");
  }
  section("probe", [&] { probe.validate(); return 0; });
}

json ExperimentConfig::to_json() const {
  auto g = grammar.to_json();
  g.erase("seed");
  auto t = train.to_json();
  for (const char* k : {"task", "ablations", "variant", "seed", "workers"}) t.erase(k);
  auto p = probe.to_json();
  p.erase("seed");
  json j{{"seed", seed},
         {"workers", workers},
         {"grammar", g},
         {"split",
          {{"train", split.train_fraction}, {"dev", split.dev_fraction}, {"test", split.test_fraction}}},
         {"vocab_cap", vocab_cap},
         {"train", t},
         {"probe", p}};
  if (corpus) j["corpus"] = corpus->string();
  if (lexicon) j["lexicon"] = lexicon->string();
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  ExperimentConfig c;
  auto resolve = [&](const json& v) {
    fs::path p = v.get<std::string>();
    return p.is_absolute() || base.empty() ? p : base / p;
  };
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "workers") {
        c.workers = value.get<unsigned>();
      } else if (key == "grammar") {
        if (value.is_object()) reject_keys(value, "grammar", {"seed"});
        c.grammar = section("grammar", [&] { return GrammarConfig::from_json(value); });
      } else if (key == "corpus") {
        c.corpus = resolve(value);
      } else if (key == "lexicon") {
        c.lexicon = resolve(value);
      } else if (key == "split") {
        if (!value.is_object()) throw ConfigError("split", "must be an object");
        for (const auto& [k, v] : value.items()) {
          if (k == "train") c.split.train_fraction = v.get<double>();
          else if (k == "dev") c.split.dev_fraction = v.get<double>();
          else if (k == "test") c.split.test_fraction = v.get<double>();
          else throw ConfigError("split." + k, "unknown key");
        }
      } else if (key == "vocab_cap") {
        c.vocab_cap = value.get<std::size_t>();
      } else if (key == "train") {
        if (value.is_object()) {
          reject_keys(value, "train", {"task", "ablations", "variant", "seed", "workers"});
        }
        c.train = section("train", [&] { return TrainConfig::from_json(value); });
      } else if (key == "probe") {
        if (value.is_object()) reject_keys(value, "probe", {"seed"});
        c.probe = section("probe", [&] { return ProbeConfig::from_json(value); });
      } else {
        throw ConfigError(key, "unknown key");
      }
    } catch (const json::exception& e) {
      throw ConfigError(key, std::string("wrong type: ") + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

GrammarConfig ExperimentConfig::grammar_config() const {
  auto g = grammar;
  g.seed = derive_seed(seed, "corpus");
  return g;
}

SplitSpec ExperimentConfig::split_spec() const {
  auto s = split;
  s.seed = derive_seed(seed, "split");
  return s;
}

std::uint64_t ExperimentConfig::mask_seed() const { return derive_seed(seed, "mask"); }

ProbeConfig ExperimentConfig::probe_config() const {
  auto p = probe;
  p.seed = derive_seed(seed, "probe");
  return p;
}

// ----------------------------------------------------------------------------
// Conditions
// ----------------------------------------------------------------------------

std::string Condition::data_id() const {
  std::string out(to_string(task));
  out += '-';
  if (ablations.empty()) return out + "base";
  for (std::size_t i = 0; i < ablations.size(); ++i) {
    if (i) out += '+';
    out += to_string(ablations[i]);
  }
  return out;
}

std::string Condition::id() const {
  auto out = data_id();
  if (variant != ModelVariant::Bidirectional) out += "." + std::string(to_string(variant));
  return out;
}

std::string Condition::label() const {
  using A = Ablation;
  const bool bidi = variant == ModelVariant::Bidirectional;
  if (ablations.empty()) return bidi ? "Base" : variant == ModelVariant::WordOnly ? "Word only" : "Unidirectional";
  if (!bidi) return id();
  if (ablations.size() == 2 && ablations[0] == A::SingleVerbFilter && ablations[1] == A::NoAkFilter) {
    return "Sing. verb no -ak";
  }
  if (ablations.size() != 1) return id();
  switch (ablations[0]) {
    case A::SuffixesOnly: return "Suffixes only";
    case A::NoSuffixes: return "No suffixes";
    case A::NeutralizedCase: return "Neutralized case";
    case A::SingleVerbFilter: return "Single verb";
    case A::NoAkFilter: return "No -ak";
    case A::NoVerb: return "No verb";
  }
  return id();
}

void Condition::validate() const {
  for (std::size_t i = 0; i < ablations.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (ablations[i] == ablations[k]) {
        throw UsageError("ablation " + std::string(to_string(ablations[i])) + " given twice");
      }
    }
    const auto a = ablations[i];
    if (task == Task::VerbNumber && a == Ablation::NoVerb) {
      throw UsageError("ablation no-verb only applies to the suffix task");
    }
    if (task == Task::SuffixRecovery &&
        (a == Ablation::SuffixesOnly || a == Ablation::NeutralizedCase)) {
      throw UsageError("ablation " + std::string(to_string(a)) +
                       " would expose suffix-task labels");
    }
  }
}

Condition Condition::parse(std::string_view task, const std::vector<std::string>& ablations,
                           std::string_view variant) {
  Condition c;
  auto t = parse_task(task);
  if (!t) throw UsageError("unknown task '" + std::string(task) + "' (verb, suffix)");
  c.task = *t;
  for (const auto& a : ablations) {
    if (a == "none" || a == "base") continue;
    auto x = parse_ablation(a);
    if (!x) throw UsageError("unknown ablation '" + a + "'");
    c.ablations.push_back(*x);
  }
  auto v = parse_model_variant(variant);
  if (!v) throw UsageError("unknown model variant '" + std::string(variant) + "'");
  c.variant = *v;
  c.validate();
  return c;
}

Condition Condition::from_id(std::string_view id) {
  std::string_view variant = "bidirectional";
  if (auto dot = id.find('.'); dot != std::string_view::npos) {
    variant = id.substr(dot + 1);
    id = id.substr(0, dot);
  }
  const auto dash = id.find('-');
  if (dash == std::string_view::npos) throw UsageError("malformed condition id '" + std::string(id) + "'");
  std::vector<std::string> ablations;
  std::string rest(id.substr(dash + 1));
  for (std::size_t b = 0; b <= rest.size();) {
    auto e = rest.find('+', b);
    if (e == std::string::npos) e = rest.size();
    ablations.push_back(rest.substr(b, e - b));
    b = e + 1;
  }
  return parse(id.substr(0, dash), ablations, variant);
}

std::vector<Condition> verb_grid() {
  using A = Ablation;
  const auto V = Task::VerbNumber;
  return {{V, {}},
          {V, {A::SuffixesOnly}},
          {V, {A::NoSuffixes}},
          {V, {A::NeutralizedCase}},
          {V, {A::SingleVerbFilter}},
          {V, {A::NoAkFilter}},
          {V, {A::SingleVerbFilter, A::NoAkFilter}}};
}

std::vector<Condition> suffix_grid() {
  const auto S = Task::SuffixRecovery;
  return {{S, {}}, {S, {Ablation::NoVerb}}, {S, {}, ModelVariant::WordOnly}};
}

// ----------------------------------------------------------------------------
// Run directory
// ----------------------------------------------------------------------------

fs::path RunDir::split(std::string_view name) const {
  return root_ / "data" / (std::string(name) + ".jsonl");
}

fs::path RunDir::task_file(const Condition& c, std::string_view split) const {
  return root_ / "tasks" / c.data_id() / (std::string(split) + ".jsonl");
}

fs::path RunDir::checkpoint(const Condition& c) const {
  return root_ / "checkpoints" / (c.id() + ".ckpt");
}

fs::path RunDir::manifest(const Condition& c) const {
  return root_ / "checkpoints" / (c.id() + ".manifest.json");
}

fs::path RunDir::metrics_json(const Condition& c) const {
  return root_ / "metrics" / (c.id() + ".json");
}

fs::path RunDir::metrics_tsv(const Condition& c) const {
  return root_ / "metrics" / (c.id() + ".tsv");
}

fs::path RunDir::report(std::string_view name) const { return root_ / "reports" / name; }

fs::path resolve_run_dir(const std::optional<fs::path>& out, const std::string& name) {
  if (out) return *out;
  if (const char* env = std::getenv("AGLAB_RUN_DIR"); env && *env) return fs::path(env) / name;
  return fs::path("runs") / name;
}

// ----------------------------------------------------------------------------
// Task files
// ----------------------------------------------------------------------------

namespace {

constexpr const char* kSplits[] = {"train", "dev", "test"};

json sentence_json(const std::string& id, const std::vector<Token>& tokens,
                   const std::optional<std::vector<GoldClause>>& clauses) {
  return json::parse(sentence_to_json_line(Sentence{id, tokens, clauses}));
}

json triple_json(const AgreementTriple& t) {
  return {{"erg", std::string(to_string(t.erg))},
          {"abs", std::string(to_string(t.abs))},
          {"dat", std::string(to_string(t.dat))}};
}

AgreementTriple triple_from_json(const json& j) {
  AgreementTriple t;
  for (CaseRole r : kCaseRoles) {
    const char* key = r == CaseRole::Ergative ? "erg" : r == CaseRole::Absolutive ? "abs" : "dat";
    auto n = parse_arg_number(j.at(key).get<std::string>());
    if (!n) throw InvalidInput("bad agreement value in task file");
    t[r] = *n;
  }
  return t;
}

template <class Instance, class F>
void write_jsonl(const fs::path& path, const std::vector<Instance>& items, F&& to_line) {
  std::string text;
  for (const auto& x : items) text += to_line(x).dump() + "\n";
  write_text(path, text);
}

template <class F>
void read_jsonl(const fs::path& path, F&& on_line) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " (run the earlier stage first)");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      on_line(json::parse(line), lineno);
    } catch (const json::exception& e) {
      throw ParseError(lineno, path.string() + ": " + e.what());
    }
  }
}

void write_verb_instances(const fs::path& path, const std::vector<VerbTaskInstance>& v) {
  write_jsonl(path, v, [](const VerbTaskInstance& x) {
    return json{{"sentence", sentence_json(x.sentence_id, x.input_tokens, std::nullopt)},
                {"mask", x.mask_index},
                {"label", triple_json(x.label)}};
  });
}

std::vector<VerbTaskInstance> read_verb_instances(const fs::path& path) {
  std::vector<VerbTaskInstance> out;
  read_jsonl(path, [&](const json& j, std::size_t lineno) {
    auto s = sentence_from_json_line(j.at("sentence").dump(), lineno);
    out.push_back({s.id, std::move(s.tokens), j.at("mask").get<int>(), triple_from_json(j.at("label"))});
  });
  return out;
}

void write_suffix_instances(const fs::path& path, const std::vector<SuffixTaskInstance>& v) {
  write_jsonl(path, v, [](const SuffixTaskInstance& x) {
    json labels = json::array();
    for (auto s : x.labels) labels.push_back(std::string(to_string(s)));
    json eligible = json::array();
    for (bool e : x.eligible) eligible.push_back(e);
    return json{{"sentence", sentence_json(x.sentence_id, x.input_tokens, x.gold_clauses)},
                {"labels", labels},
                {"eligible", eligible}};
  });
}

std::vector<SuffixTaskInstance> read_suffix_instances(const fs::path& path) {
  std::vector<SuffixTaskInstance> out;
  read_jsonl(path, [&](const json& j, std::size_t lineno) {
    auto s = sentence_from_json_line(j.at("sentence").dump(), lineno);
    SuffixTaskInstance x;
    x.sentence_id = s.id;
    x.input_tokens = std::move(s.tokens);
    x.gold_clauses = std::move(s.gold_clauses);
    for (const auto& l : j.at("labels")) {
      auto suffix = parse_nuclear_suffix(l.get<std::string>());
      if (!suffix) throw ParseError(lineno, "bad suffix label in " + path.string());
      x.labels.push_back(*suffix);
    }
    for (const auto& e : j.at("eligible")) x.eligible.push_back(e.get<bool>());
    if (x.labels.size() != x.input_tokens.size() || x.eligible.size() != x.input_tokens.size()) {
      throw ParseError(lineno, "label count differs from token count in " + path.string());
    }
    out.push_back(std::move(x));
  });
  return out;
}

LemmaLexicon run_lexicon(const RunDir& run) { return LemmaLexicon::read_tsv(run.lexicon()); }

Vocab run_vocab(const RunDir& run) {
  if (!fs::exists(run.vocab())) {
    throw Error("missing " + run.vocab().string() + " (run build-vocab first)");
  }
  return Vocab::read_tsv(run.vocab());
}

TrainConfig train_config(const ExperimentConfig& config, const Condition& c) {
  auto t = config.train;
  t.task = c.task;
  t.ablations = c.ablations;
  t.variant = c.variant;
  t.seed = config.seed;
  t.workers = config.workers;
  t.validate();
  return t;
}

std::string tsv_value(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

void append_ratio(std::string& tsv, const std::string& name, std::optional<double> v) {
  tsv += "test\t" + name + "\t" + (v ? tsv_value(*v) : std::string("NA")) + "\n";
}

}  // namespace

// ----------------------------------------------------------------------------
// Stages
// ----------------------------------------------------------------------------

void gen_corpus(const ExperimentConfig& config, const RunDir& run, std::ostream& log) {
  config.validate();
  fs::create_directories(run.root());
  write_json(run.config(), config.to_json());
  std::vector<Sentence> sentences;
  LemmaLexicon lexicon;
  if (config.corpus) {
    sentences = read_corpus_jsonl(*config.corpus);
    lexicon = LemmaLexicon::read_tsv(*config.lexicon);
  } else {
    auto generated = generate_corpus(config.grammar_config(), config.workers);
    sentences = std::move(generated.sentences);
    lexicon = std::move(generated.lexicon);
  }
  if (sentences.empty()) throw InvalidInput("corpus has no sentences");
  write_corpus_jsonl(run.corpus(), sentences);
  lexicon.write_tsv(run.lexicon());
  auto stats = compute_stats(sentences).to_json();
  stats["corpus_hash"] = corpus_hash(sentences);
  write_json(run.corpus_stats(), stats);
  log << "corpus: " << sentences.size() << " sentences -> " << run.corpus().string() << "\n";
}

void build_vocab(const ExperimentConfig& config, const RunDir& run, std::ostream& log) {
  if (!fs::exists(run.corpus())) {
    throw Error("missing " + run.corpus().string() + " (run gen-corpus first)");
  }
  const auto sentences = read_corpus_jsonl(run.corpus());
  const auto split = split_corpus(sentences, config.split_spec());
  fs::create_directories(run.split("train").parent_path());
  write_corpus_jsonl(run.split("train"), split.train);
  write_corpus_jsonl(run.split("dev"), split.dev);
  write_corpus_jsonl(run.split("test"), split.test);
  const auto vocab = build_vocab(split.train, config.vocab_cap);
  vocab.write_tsv(run.vocab());
  log << "split: " << split.train.size() << "/" << split.dev.size() << "/" << split.test.size()
      << "; vocab: " << vocab.tokens.size() << " tokens, " << vocab.lemmas.size() << " lemmas, "
      << vocab.ngrams.size() << " ngrams\n";
}

void build_task(const ExperimentConfig& config, const RunDir& run, const Condition& c,
                std::ostream& log) {
  c.validate();
  const auto lexicon = run_lexicon(run);
  for (const char* name : kSplits) {
    if (!fs::exists(run.split(name))) {
      throw Error("missing " + run.split(name).string() + " (run build-vocab first)");
    }
    const auto sentences = read_corpus_jsonl(run.split(name));
    std::size_t count = 0;
    if (c.task == Task::VerbNumber) {
      BuildStats stats;
      auto inst = build_verb_task(sentences, config.mask_seed(), &stats);
      for (auto a : c.ablations) inst = apply_ablation(std::move(inst), a, lexicon);
      write_verb_instances(run.task_file(c, name), inst);
      count = inst.size();
    } else {
      auto inst = build_suffix_task(sentences, lexicon);
      for (auto a : c.ablations) inst = apply_ablation(std::move(inst), a, lexicon);
      write_suffix_instances(run.task_file(c, name), inst);
      count = inst.size();
    }
    if (count == 0) throw InvalidInput(std::string("task ") + c.data_id() + " has no " + name + " instances");
    log << "task " << c.data_id() << " " << name << ": " << count << " instances\n";
  }
}

namespace {

struct LoadedTask {
  WordIndex words;
  EncodedSet train, dev, test;
  std::vector<VerbTaskInstance> verb_test;
  std::vector<SuffixTaskInstance> suffix_test;
};

LoadedTask load_task(const RunDir& run, const Condition& c, const Vocab& vocab, bool with_train) {
  LoadedTask t;
  if (c.task == Task::VerbNumber) {
    if (with_train) {
      t.train = encode_instances(read_verb_instances(run.task_file(c, "train")), vocab, t.words);
      t.dev = encode_instances(read_verb_instances(run.task_file(c, "dev")), vocab, t.words);
    }
    t.verb_test = read_verb_instances(run.task_file(c, "test"));
    t.test = encode_instances(t.verb_test, vocab, t.words);
  } else {
    if (with_train) {
      t.train = encode_instances(read_suffix_instances(run.task_file(c, "train")), vocab, t.words);
      t.dev = encode_instances(read_suffix_instances(run.task_file(c, "dev")), vocab, t.words);
    }
    t.suffix_test = read_suffix_instances(run.task_file(c, "test"));
    t.test = encode_instances(t.suffix_test, vocab, t.words);
  }
  return t;
}

}  // namespace

void train_condition(const ExperimentConfig& config, const RunDir& run, const Condition& c,
                     std::ostream& log) {
  const auto tc = train_config(config, c);
  const auto vocab = run_vocab(run);
  auto task = load_task(run, c, vocab, true);
  const auto hash = corpus_hash(read_corpus_jsonl(run.split("train")));
  log << "train " << c.id() << ": " << task.train.size() << " train / " << task.dev.size()
      << " dev instances\n";
  const auto result = train(tc, vocab, task.words, task.train, task.dev, hash);
  fs::create_directories(run.checkpoint(c).parent_path());
  save_checkpoint(run.checkpoint(c), result.best);
  write_json(run.manifest(c), result.manifest.to_json(true));
  log << "train " << c.id() << ": " << result.manifest.updates << " updates, best step "
      << result.manifest.best_step << " (" << result.manifest.stop_reason << ")\n";
  if (result.diverged()) {
    throw NumericalError("training diverged at update " +
                         std::to_string(*result.manifest.diverged_at) + ": " +
                         result.manifest.divergence_message);
  }
}

nlohmann::json evaluate_condition(const ExperimentConfig& config, const RunDir& run,
                                  const Condition& c, std::ostream& log) {
  c.validate();
  const auto vocab = run_vocab(run);
  if (!fs::exists(run.checkpoint(c))) {
    throw Error("missing " + run.checkpoint(c).string() + " (run train first)");
  }
  const auto checkpoint = load_checkpoint(run.checkpoint(c), vocab.hash());
  if (checkpoint.model.dims().variant != c.variant) {
    throw InvalidInput("checkpoint variant differs from condition " + c.id());
  }
  auto manifest = read_json_file(run.manifest(c));
  manifest.erase("wall_clock_seconds");
  auto task = load_task(run, c, vocab, false);

  json j{{"condition", c.id()},
         {"label", c.label()},
         {"task", std::string(to_string(c.task))},
         {"train", manifest}};
  std::string tsv = "step\tmetric\tvalue\n";
  for (const auto& e : manifest.at("evaluations")) {
    tsv += std::to_string(e.at("step").get<std::uint64_t>()) + "\tdev_metric\t" +
           tsv_value(e.at("dev_metric").get<double>()) + "\n";
    tsv += std::to_string(e.at("step").get<std::uint64_t>()) + "\ttrain_loss\t" +
           tsv_value(e.at("train_loss").get<double>()) + "\n";
  }
  std::string text;
  if (c.task == Task::VerbNumber) {
    const auto preds = predict_verb(checkpoint.model, task.words, task.test, config.workers);
    const auto m = verb_metrics(preds, task.test.verb_labels);
    j["test"] = to_json(m);
    for (CaseRole r : kCaseRoles) {
      const std::string role(to_string(r));
      append_ratio(tsv, role + "_accuracy", m[r].accuracy.value());
      append_ratio(tsv, role + "_presence_recall", m[r].presence_recall.value());
    }
    const std::vector<VerbRow> rows{{c.label(), m}};
    text = verb_table(rows);
  } else {
    const auto preds = predict_suffix(checkpoint.model, task.words, task.test, config.workers);
    const auto m = suffix_metrics(preds, task.suffix_test);
    j["test"] = to_json(m);
    for (auto s : kScoredSuffixes) append_ratio(tsv, std::string(to_string(s)) + "_f1", m[s].f1());
    append_ratio(tsv, "any_f1", m.any.f1());
    append_ratio(tsv, "macro_f1", m.macro_f1());
    text = suffix_detail_table(m);
    const bool has_clauses = std::all_of(task.suffix_test.begin(), task.suffix_test.end(),
                                         [](const auto& x) { return x.gold_clauses.has_value(); });
    if (has_clauses) {
      const auto hard = closest_verb_split(task.suffix_test, preds);
      j["closest_verb"] = to_json(hard);
      text += "\n" + hard_case_table(hard);
    }
  }
  write_json(run.metrics_json(c), j);
  write_text(run.metrics_tsv(c), tsv);
  write_text(run.report(c.id() + ".txt"), text);
  log << "evaluate " << c.id() << " -> " << run.metrics_json(c).string() << "\n" << text;
  return j;
}

void report(const RunDir& run, std::ostream& log) {
  const auto dir = run.root() / "metrics";
  if (!fs::is_directory(dir)) throw Error("no metrics under " + run.root().string());
  std::map<std::string, json> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") found[e.path().stem().string()] = read_json_file(e.path());
  }
  // Grid rows first, in table order, then anything else by id.
  std::vector<std::string> order;
  for (const auto& grid : {verb_grid(), suffix_grid()}) {
    for (const auto& c : grid) {
      if (found.count(c.id())) order.push_back(c.id());
    }
  }
  for (const auto& [id, _] : found) {
    if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);
  }
  std::vector<VerbRow> verb_rows;
  std::vector<SuffixRow> suffix_rows;
  json summary = json::array();
  for (const auto& id : order) {
    const auto& j = found[id];
    const auto label = j.at("label").get<std::string>();
    if (j.at("task") == "verb") {
      verb_rows.emplace_back(label, verb_metrics_from_json(j.at("test")));
    } else {
      suffix_rows.emplace_back(label, suffix_metrics_from_json(j.at("test")));
    }
    summary.push_back({{"condition", id}, {"label", label}, {"task", j.at("task")}, {"test", j.at("test")}});
  }
  if (!verb_rows.empty()) {
    const auto t = verb_table(verb_rows);
    write_text(run.report("verb_conditions.txt"), t);
    log << t << "\n";
  }
  if (!suffix_rows.empty()) {
    const auto t = suffix_condition_table(suffix_rows);
    write_text(run.report("suffix_conditions.txt"), t);
    log << t << "\n";
  }
  write_json(run.report("conditions.json"), summary);
}

// ----------------------------------------------------------------------------
// Probing
// ----------------------------------------------------------------------------

nlohmann::json probe(const ExperimentConfig& config, const RunDir& run,
                     const ProbeSources& sources, std::ostream& log) {
  const auto& c = sources.condition;
  if (c.task != Task::SuffixRecovery) throw UsageError("probing needs a suffix-task checkpoint");
  c.validate();
  const auto vocab = run_vocab(run);
  const auto lexicon = run_lexicon(run);
  if (!fs::exists(run.checkpoint(c))) {
    throw Error("missing " + run.checkpoint(c).string() + " (run train first)");
  }
  const auto checkpoint = load_checkpoint(run.checkpoint(c), vocab.hash());
  const auto before = checkpoint.model.hash();
  const auto pc = config.probe_config();

  const auto train_sentences = read_corpus_jsonl(run.split("train"));
  const auto test_sentences = read_corpus_jsonl(run.split("test"));

  json report{{"checkpoint", c.id()}, {"probe_config", pc.to_json()}};

  // Closest-verb connection probes.
  json diff{{"label", std::string(to_string(ProbeLabel::ClosestVerb))},
            {"selector", std::string(to_string(Selector::NuclearSuffixed))},
            {"rows", json::array()}};
  std::vector<DifferentialReport> reports;
  try {
    auto train_records = collect_states(checkpoint.model, vocab, lexicon, train_sentences,
                                        Selector::NuclearSuffixed, ProbeLabel::ClosestVerb, {},
                                        config.workers);
    if (pc.max_records && train_records.size() > pc.max_records) {
      std::vector<std::size_t> keep(pc.max_records);
      for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
      train_records = train_records.subset(keep);
    }
    const auto test_records =
        collect_states(checkpoint.model, vocab, lexicon, test_sentences, Selector::NuclearSuffixed,
                       ProbeLabel::ClosestVerb, train_records.label_names, config.workers);
    if (sources.dump_states) {
      write_state_dump(run.report("closest-verb.train.states"), train_records);
      write_state_dump(run.report("closest-verb.test.states"), test_records);
    }
    diff["labels"] = train_records.label_names;
    for (auto arch : {ProbeArch::Linear, ProbeArch::Mlp1}) {
      auto p = pc;
      p.arch = arch;
      const auto trained = train_probe(train_records, p);
      const auto r = differential_report(trained.probe, test_records);
      auto row = r.to_json(train_records.label_names);
      row["selected_run"] = trained.selected;
      row["selected_dev_accuracy"] = trained.selected_dev_accuracy;
      row["majority_dev_accuracy"] = trained.majority_dev_accuracy;
      json runs = json::array();
      for (const auto& x : trained.runs) runs.push_back({{"seed", x.seed}, {"dev_accuracy", x.dev_accuracy}});
      row["runs"] = runs;
      diff["rows"].push_back(row);
      reports.push_back(r);
    }
  } catch (const InvalidInput& e) {
    diff["notice"] = std::string("skipped: ") + e.what();
  }
  report["differential"] = diff;

  std::vector<Sentence> gen_train, gen_test;
  if (sources.annotated_train) gen_train = read_annotated(*sources.annotated_train, sources.format);
  if (sources.annotated_test) gen_test = read_annotated(*sources.annotated_test, sources.format);
  const auto rows = generalization_suite(
      checkpoint.model, vocab, lexicon, sources.annotated_train ? gen_train : train_sentences,
      sources.annotated_test ? gen_test : test_sentences, pc, config.workers);
  json gen = json::array();
  for (const auto& r : rows) gen.push_back(to_json(r));
  report["generalization"] = gen;

  if (checkpoint.model.hash() != before) throw Error("probing modified the main model");

  write_json(run.report("probe.json"), report);
  std::string text = "Closest-verb connection (" + c.id() + ")\n";
  text += reports.empty() ? diff.value("notice", std::string()) + "\n" : differential_table(reports);
  text += "\nGrammatical generalization (mlp2)\n" + generalization_table(rows);
  write_text(run.report("probe.txt"), text);
  log << text;
  return report;
}

void pipeline(const ExperimentConfig& config, const RunDir& run,
              const std::vector<Condition>& conditions, std::ostream& log) {
  for (const auto& c : conditions) {
    c.validate();
    train_config(config, c);
  }
  gen_corpus(config, run, log);
  build_vocab(config, run, log);
  std::vector<std::string> built;
  for (const auto& c : conditions) {
    if (std::find(built.begin(), built.end(), c.data_id()) == built.end()) {
      build_task(config, run, c, log);
      built.push_back(c.data_id());
    }
    train_condition(config, run, c, log);
    evaluate_condition(config, run, c, log);
  }
  report(run, log);
}

// ----------------------------------------------------------------------------
// Command line
// ----------------------------------------------------------------------------

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "Experiment config (JSON)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Experiment seed (overrides the config)");
  app->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "Run directory");
}

struct Resolved {
  ExperimentConfig config;
  RunDir run;
};

Resolved resolve(const Common& c) {
  ExperimentConfig config;
  std::optional<fs::path> out;
  if (!c.out.empty()) out = c.out;
  if (c.config.empty()) {
    // Later stages reuse the config stored in the run directory.
    if (!out) throw UsageError("--out is required without --config");
    const RunDir run(*out);
    if (!fs::exists(run.config())) {
      throw UsageError("--config is required (no config.json in " + run.root().string() + ")");
    }
    config = ExperimentConfig::load(run.config());
  } else {
    config = ExperimentConfig::load(c.config);
  }
  if (c.seed) config.seed = *c.seed;
  if (c.workers) config.workers = *c.workers;
  config.validate();
  const auto name = fs::path(c.config).stem().string() + "-seed" + std::to_string(config.seed);
  return {config, RunDir(resolve_run_dir(out, name))};
}

struct ConditionArgs {
  std::string task = "verb";
  std::vector<std::string> ablations;
  std::string variant = "bidirectional";
};

void add_condition(CLI::App* app, ConditionArgs& a) {
  app->add_option("--task", a.task, "verb or suffix");
  app->add_option("--ablation", a.ablations, "Ablation (repeatable)");
  app->add_option("--variant", a.variant, "bidirectional, unidirectional or word-only");
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Basque agreement laboratory"};
  app.require_subcommand(1);

  Common gen_c, vocab_c, task_c, train_c, eval_c, probe_c, report_c, pipe_c;
  ConditionArgs task_a, train_a, eval_a, pipe_a;

  auto* gen = app.add_subcommand("gen-corpus", "Generate (or import) a corpus");
  add_common(gen, gen_c, true);
  auto* vocab = app.add_subcommand("build-vocab", "Split the corpus and build the vocabulary");
  add_common(vocab, vocab_c, false);
  auto* task = app.add_subcommand("build-task", "Build task instances for one condition");
  add_common(task, task_c, false);
  add_condition(task, task_a);
  auto* train_cmd = app.add_subcommand("train", "Train one condition");
  add_common(train_cmd, train_c, false);
  add_condition(train_cmd, train_a);
  auto* eval = app.add_subcommand("evaluate", "Evaluate one condition on test");
  add_common(eval, eval_c, false);
  add_condition(eval, eval_a);
  auto* rep = app.add_subcommand("report", "Condition tables from all metrics");
  add_common(rep, report_c, false);

  auto* prb = app.add_subcommand("probe", "Diagnostic classifiers over a suffix checkpoint");
  add_common(prb, probe_c, false);
  std::string probe_condition = "suffix-base";
  std::string annotated_train, annotated_test, annotated_format = "tsv8";
  bool dump_states = false;
  prb->add_option("--condition", probe_condition, "Checkpoint condition id");
  prb->add_option("--annotated-train", annotated_train, "Annotated corpus for generalization probes")
      ->check(CLI::ExistingFile);
  prb->add_option("--annotated-test", annotated_test, "Annotated corpus for generalization probes")
      ->check(CLI::ExistingFile);
  prb->add_option("--format", annotated_format, "tsv8 or conllu")
      ->check(CLI::IsMember({"tsv8", "conllu"}));
  prb->add_flag("--dump-states", dump_states, "Write binary state dumps");

  auto* pipe = app.add_subcommand("pipeline", "Corpus to report for one condition or a grid");
  add_common(pipe, pipe_c, true);
  add_condition(pipe, pipe_a);
  std::string grid;
  pipe->add_option("--grid", grid, "verb, suffix or all")->check(CLI::IsMember({"verb", "suffix", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << "\n";
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto condition_of = [](const ConditionArgs& a) {
    return Condition::parse(a.task, a.ablations, a.variant);
  };

  try {
    if (gen->parsed()) {
      auto r = resolve(gen_c);
      gen_corpus(r.config, r.run, out);
    } else if (vocab->parsed()) {
      auto r = resolve(vocab_c);
      build_vocab(r.config, r.run, out);
    } else if (task->parsed()) {
      const auto c = condition_of(task_a);
      auto r = resolve(task_c);
      build_task(r.config, r.run, c, out);
    } else if (train_cmd->parsed()) {
      const auto c = condition_of(train_a);
      auto r = resolve(train_c);
      train_config(r.config, c);
      train_condition(r.config, r.run, c, out);
    } else if (eval->parsed()) {
      const auto c = condition_of(eval_a);
      auto r = resolve(eval_c);
      evaluate_condition(r.config, r.run, c, out);
    } else if (rep->parsed()) {
      auto r = resolve(report_c);
      report(r.run, out);
    } else if (prb->parsed()) {
      ProbeSources s;
      s.condition = Condition::from_id(probe_condition);
      if (!annotated_train.empty()) s.annotated_train = annotated_train;
      if (!annotated_test.empty()) s.annotated_test = annotated_test;
      if (s.annotated_train.has_value() != s.annotated_test.has_value()) {
        throw UsageError("--annotated-train and --annotated-test go together");
      }
      s.format = annotated_format == "conllu" ? AnnotatedFormat::ConllU : AnnotatedFormat::Tsv8;
      s.dump_states = dump_states;
      auto r = resolve(probe_c);
      probe(r.config, r.run, s, out);
    } else if (pipe->parsed()) {
      std::vector<Condition> conditions;
      if (grid.empty()) {
        conditions.push_back(condition_of(pipe_a));
      } else {
        if (grid != "suffix") conditions = verb_grid();
        if (grid != "verb") {
          for (auto& c : suffix_grid()) conditions.push_back(c);
        }
      }
      auto r = resolve(pipe_c);
      pipeline(r.config, r.run, conditions, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace aglab::cli
