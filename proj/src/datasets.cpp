#include "aglab/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "aglab/grammar.hpp"

namespace aglab {

std::string_view to_string(Task t) {
  return t == Task::VerbNumber ? "verb" : "suffix";
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::SuffixesOnly: return "suffixes-only";
    case Ablation::NoSuffixes: return "no-suffixes";
    case Ablation::NeutralizedCase: return "neutralized-case";
    case Ablation::SingleVerbFilter: return "single-verb";
    case Ablation::NoAkFilter: return "no-ak";
    case Ablation::NoVerb: return "no-verb";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view s) {
  if (s == "verb") return Task::VerbNumber;
  if (s == "suffix") return Task::SuffixRecovery;
  return std::nullopt;
}

std::optional<Ablation> parse_ablation(std::string_view s) {
  for (Ablation a : {Ablation::SuffixesOnly, Ablation::NoSuffixes, Ablation::NeutralizedCase,
                     Ablation::SingleVerbFilter, Ablation::NoAkFilter, Ablation::NoVerb}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

// ----------------------------------------------------------------------------
// Task construction
// ----------------------------------------------------------------------------

std::vector<VerbTaskInstance> build_verb_task(std::span<const Sentence> sentences,
                                              std::uint64_t seed, BuildStats* stats) {
  std::vector<VerbTaskInstance> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<int> auxiliaries;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (s.tokens[i].is_auxiliary && is_aux_form(s.tokens[i].surface)) {
        auxiliaries.push_back(static_cast<int>(i));
      }
    }
    if (auxiliaries.empty()) {
      if (stats) ++stats->skipped;
      continue;
    }
    std::mt19937_64 rng(derive_seed(seed, fnv1a(s.id)));
    const int mask = auxiliaries[std::uniform_int_distribution<std::size_t>(
        0, auxiliaries.size() - 1)(rng)];

    VerbTaskInstance inst;
    inst.sentence_id = s.id;
    inst.input_tokens = s.tokens;
    inst.mask_index = mask;
    inst.label = oracle_agreement(s.tokens[mask].surface).triple;
    auto& masked = inst.input_tokens[mask];
    masked.surface = std::string(kVerbMask);
    masked.lemma = std::string(kVerbMask);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<SuffixTaskInstance> build_suffix_task(std::span<const Sentence> sentences,
                                                  const LemmaLexicon& lexicon) {
  std::vector<SuffixTaskInstance> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    SuffixTaskInstance inst;
    inst.sentence_id = s.id;
    inst.input_tokens = s.tokens;
    inst.labels.assign(s.tokens.size(), NuclearSuffix::None);
    inst.eligible.assign(s.tokens.size(), true);
    inst.gold_clauses = s.gold_clauses;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      auto& tok = inst.input_tokens[i];
      if (tok.is_verb || is_reserved_symbol(tok.surface)) continue;
      const auto seg = segment(tok.surface, lexicon);
      if (!seg) {
        inst.eligible[i] = false;
        continue;
      }
      tok.surface = seg->stem;
      inst.labels[i] = seg->suffix;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::string display_text(const SuffixTaskInstance& instance) {
  std::string out;
  for (std::size_t i = 0; i < instance.input_tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    const auto& surface = instance.input_tokens[i].surface;
    const bool stripped = instance.eligible[i] && instance.labels[i] != NuclearSuffix::None;
    out += stripped ? attach(surface, NuclearSuffix::A) : surface;
  }
  return out;
}

std::string suffix_symbol(NuclearSuffix s) {
  if (s == NuclearSuffix::None) return "-";
  return "-" + std::string(suffix_string(s));
}

namespace {

bool contains_ak(std::span<const Token> tokens) {
  return std::any_of(tokens.begin(), tokens.end(),
                     [](const Token& t) { return t.nuclear == NuclearSuffix::Ak; });
}

template <class Instance, class Pred>
std::vector<Instance> keep_if(std::vector<Instance> in, Pred pred) {
  std::vector<Instance> out;
  out.reserve(in.size());
  for (auto& x : in) {
    if (pred(x)) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace

std::vector<VerbTaskInstance> apply_ablation(std::vector<VerbTaskInstance> instances,
                                             Ablation mode, const LemmaLexicon& lexicon) {
  switch (mode) {
    case Ablation::SuffixesOnly:
      for (auto& inst : instances) {
        for (std::size_t i = 0; i < inst.input_tokens.size(); ++i) {
          if (static_cast<int>(i) == inst.mask_index) continue;
          auto& t = inst.input_tokens[i];
          t.surface = suffix_symbol(t.nuclear);
          t.lemma = t.surface;
        }
      }
      return instances;
    case Ablation::NoSuffixes:
      for (auto& inst : instances) {
        for (auto& t : inst.input_tokens) {
          if (t.is_verb || is_reserved_symbol(t.surface)) continue;
          const auto seg = segment(t.surface, lexicon);
          if (seg) t.surface = seg->stem;
        }
      }
      return instances;
    case Ablation::NeutralizedCase:
      for (auto& inst : instances) {
        for (auto& t : inst.input_tokens) {
          if (t.is_verb || is_reserved_symbol(t.surface)) continue;
          t.surface = neutralize(t.surface, lexicon);
        }
      }
      return instances;
    case Ablation::SingleVerbFilter:
      return keep_if(std::move(instances), [](const VerbTaskInstance& x) {
        return is_single_verb(x.input_tokens);
      });
    case Ablation::NoAkFilter:
      return keep_if(std::move(instances),
                     [](const VerbTaskInstance& x) { return !contains_ak(x.input_tokens); });
    case Ablation::NoVerb:
      throw InvalidInput("ablation no-verb does not apply to the verb task");
  }
  return instances;
}

std::vector<SuffixTaskInstance> apply_ablation(std::vector<SuffixTaskInstance> instances,
                                               Ablation mode, const LemmaLexicon&) {
  switch (mode) {
    case Ablation::NoSuffixes:
      // Suffix-task inputs are already stripped.
      return instances;
    case Ablation::SuffixesOnly:
    case Ablation::NeutralizedCase:
      throw InvalidInput("ablation " + std::string(to_string(mode)) +
                         " would expose suffix-task labels");
    case Ablation::SingleVerbFilter:
      return keep_if(std::move(instances), [](const SuffixTaskInstance& x) {
        return is_single_verb(x.input_tokens);
      });
    case Ablation::NoAkFilter:
      return keep_if(std::move(instances),
                     [](const SuffixTaskInstance& x) { return !contains_ak(x.input_tokens); });
    case Ablation::NoVerb:
      for (auto& inst : instances) {
        for (auto& t : inst.input_tokens) {
          if (!t.is_verb) continue;
          t.surface = std::string(kVerbMask);
          t.lemma = std::string(kVerbMask);
        }
      }
      return instances;
  }
  return instances;
}

// ----------------------------------------------------------------------------
// Vocabulary
// ----------------------------------------------------------------------------

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // stray continuation byte: treat as its own unit
}

}  // namespace

std::vector<std::string> extract_ngrams(std::string_view surface) {
  std::string marked;
  marked.reserve(surface.size() + 2);
  marked += '^';
  marked += surface;
  marked += '$';
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < marked.size();) {
    starts.push_back(i);
    i += std::min(utf8_length(static_cast<unsigned char>(marked[i])), marked.size() - i);
  }
  starts.push_back(marked.size());
  const std::size_t units = starts.size() - 1;
  std::vector<std::string> out;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t b = 0; b + n <= units; ++b) {
      out.emplace_back(marked.substr(starts[b], starts[b + n] - starts[b]));
    }
  }
  return out;
}

VocabTable::VocabTable() {
  for (auto r : kReservedSymbols) push(std::string(r));
}

void VocabTable::push(std::string s) {
  if (ids_.count(s)) throw InvalidInput("duplicate vocabulary entry: " + s);
  ids_.emplace(s, static_cast<int>(strings_.size()));
  strings_.push_back(std::move(s));
}

int VocabTable::id(std::string_view s) const {
  auto it = ids_.find(std::string(s));
  return it == ids_.end() ? unk_id() : it->second;
}

bool VocabTable::contains(std::string_view s) const { return ids_.count(std::string(s)) > 0; }

namespace {

constexpr std::array<std::string_view, 3> kVocabKinds{"token", "lemma", "ngram"};

void write_vocab_lines(std::ostream& out, const Vocab& v) {
  const std::array<const VocabTable*, 3> tables{&v.tokens, &v.lemmas, &v.ngrams};
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const auto& strings = tables[k]->strings();
    for (std::size_t i = 0; i < strings.size(); ++i) {
      out << kVocabKinds[k] << '\t' << strings[i] << '\t' << i << '\n';
    }
  }
}

void fill_table(VocabTable& table, const std::unordered_map<std::string, std::size_t>& counts,
                std::size_t cap) {
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (entries.size() > cap) entries.resize(cap);
  for (auto& e : entries) table.push(std::move(e.first));
}

}  // namespace

std::uint64_t Vocab::hash() const {
  std::ostringstream os;
  write_vocab_lines(os, *this);
  return fnv1a(os.str());
}

void Vocab::write_tsv(std::ostream& out) const { write_vocab_lines(out, *this); }

void Vocab::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  write_tsv(out);
}

Vocab Vocab::read_tsv(std::istream& in) {
  Vocab v;
  std::array<VocabTable*, 3> tables{&v.tokens, &v.lemmas, &v.ngrams};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(lineno, "expected kind, string, id");
    const auto kind = std::string_view(line).substr(0, t1);
    const auto str = line.substr(t1 + 1, t2 - t1 - 1);
    std::size_t id = 0;
    const auto id_text = std::string_view(line).substr(t2 + 1);
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size()) {
      throw ParseError(lineno, "bad id");
    }
    auto k = std::find(kVocabKinds.begin(), kVocabKinds.end(), kind);
    if (k == kVocabKinds.end()) throw ParseError(lineno, "unknown kind " + std::string(kind));
    auto& table = *tables[static_cast<std::size_t>(k - kVocabKinds.begin())];
    if (id < table.size()) {
      if (table.string_of(static_cast<int>(id)) != str) {
        throw ParseError(lineno, "reserved entry mismatch");
      }
      continue;
    }
    if (id != table.size()) throw ParseError(lineno, "ids must be consecutive");
    table.push(str);
  }
  return v;
}

Vocab Vocab::read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  return read_tsv(in);
}

void VocabBuilder::add(const Token& t) {
  if (!is_reserved_symbol(t.surface)) ++tokens_[t.surface];
  if (!is_reserved_symbol(t.lemma)) ++lemmas_[t.lemma];
}

Vocab VocabBuilder::finish(std::size_t cap) const {
  std::unordered_map<std::string, std::size_t> ngrams;
  for (const auto& [surface, count] : tokens_) {
    for (auto& ng : extract_ngrams(surface)) ngrams[std::move(ng)] += count;
  }
  Vocab v;
  fill_table(v.tokens, tokens_, cap);
  fill_table(v.lemmas, lemmas_, cap);
  fill_table(v.ngrams, ngrams, cap);
  return v;
}

Vocab build_vocab(std::span<const Sentence> train_sentences, std::size_t cap) {
  if (train_sentences.empty()) throw InvalidInput("build_vocab: empty training set");
  VocabBuilder b;
  for (const auto& s : train_sentences) b.add(s.tokens);
  return b.finish(cap);
}

// ----------------------------------------------------------------------------
// Splits
// ----------------------------------------------------------------------------

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0)) throw ConfigError("train_fraction", "must be positive");
  if (!(dev_fraction > 0.0)) throw ConfigError("dev_fraction", "must be positive");
  if (!(test_fraction > 0.0)) throw ConfigError("test_fraction", "must be positive");
  if (std::abs(train_fraction + dev_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split", "fractions must sum to 1");
  }
}

CorpusSplit split_corpus(std::span<const Sentence> sentences, const SplitSpec& spec) {
  spec.validate();
  if (sentences.empty()) throw InvalidInput("split_corpus: empty input");
  const std::size_t n = sentences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n))));
  const auto n_dev = std::min<std::size_t>(
      n - n_train,
      static_cast<std::size_t>(std::llround(spec.dev_fraction * static_cast<double>(n))));

  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    std::vector<Sentence> part;
    part.reserve(idx.size());
    for (auto i : idx) part.push_back(sentences[i]);
    return part;
  };
  CorpusSplit out;
  out.train = take(0, n_train);
  out.dev = take(n_train, n_train + n_dev);
  out.test = take(n_train + n_dev, n);
  return out;
}

// ----------------------------------------------------------------------------
// Annotated corpora
// ----------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::string> field(std::string_view s) {
  if (s == "_" || s.empty()) return std::nullopt;
  return std::string(s);
}

struct PendingSentence {
  Sentence sentence;
  std::vector<std::size_t> lines;
};

void finish_token(Token& t) {
  const std::string pos = t.pos.value_or("");
  t.is_verb = pos == "VERB" || pos == "AUX";
  t.is_auxiliary = pos == "AUX";
  if (!t.case_tag) t.case_tag = "none";
  if (t.case_tag) {
    t.gold_case = parse_case_role(*t.case_tag);
  }
  if (t.gold_case && t.gold_number && !t.is_verb) {
    t.nuclear = case_number_to_suffix(*t.gold_case, *t.gold_number);
  }
}

void close_sentence(PendingSentence& p, std::vector<Sentence>& out) {
  if (p.sentence.tokens.empty()) return;
  const int n = static_cast<int>(p.sentence.tokens.size());
  for (std::size_t i = 0; i < p.sentence.tokens.size(); ++i) {
    const auto& h = p.sentence.tokens[i].head;
    if (h && (*h < 0 || *h > n || *h == static_cast<int>(i) + 1)) {
      throw ParseError(p.lines[i], "head index " + std::to_string(*h) +
                                       " inconsistent with sentence of length " +
                                       std::to_string(n));
    }
  }
  if (p.sentence.id.empty()) p.sentence.id = "ann-" + std::to_string(out.size());
  out.push_back(std::move(p.sentence));
  p = PendingSentence{};
}

}  // namespace

std::vector<Sentence> read_annotated(std::istream& in, AnnotatedFormat format) {
  std::vector<Sentence> out;
  PendingSentence pending;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      close_sentence(pending, out);
      continue;
    }
    if (line[0] == '#') {
      constexpr std::string_view kSentId = "# sent_id = ";
      if (line.rfind(kSentId, 0) == 0) pending.sentence.id = line.substr(kSentId.size());
      continue;
    }
    const auto cols = split_tabs(line);
    Token t;
    std::string_view id_col, head_col;
    if (format == AnnotatedFormat::Tsv8) {
      if (cols.size() != 8) {
        throw ParseError(lineno, "expected 8 columns, got " + std::to_string(cols.size()));
      }
      id_col = cols[0];
      t.surface = std::string(cols[1]);
      t.lemma = std::string(cols[2]);
      t.pos = field(cols[3]);
      t.case_tag = field(cols[4]);
      if (auto num = field(cols[5])) {
        t.gold_number = parse_number_tag(*num);
        if (!t.gold_number) throw ParseError(lineno, "unknown number value " + *num);
      }
      head_col = cols[6];
      t.dep_label = field(cols[7]);
    } else {
      if (cols.size() != 10) {
        throw ParseError(lineno, "expected 10 columns, got " + std::to_string(cols.size()));
      }
      id_col = cols[0];
      if (id_col.find_first_of("-.") != std::string_view::npos) continue;
      t.surface = std::string(cols[1]);
      t.lemma = std::string(cols[2]);
      t.pos = field(cols[3]);
      bool indefinite = false;
      for (std::string_view feats = cols[5]; !feats.empty() && feats != "_";) {
        const auto bar = feats.find('|');
        const auto kv = feats.substr(0, bar);
        const auto eq = kv.find('=');
        if (eq != std::string_view::npos) {
          const auto key = kv.substr(0, eq);
          const auto value = kv.substr(eq + 1);
          if (key == "Case") t.case_tag = std::string(value);
          if (key == "Number") t.gold_number = parse_number_tag(value);
          if (key == "Definite" && value == "Ind") indefinite = true;
        }
        if (bar == std::string_view::npos) break;
        feats = feats.substr(bar + 1);
      }
      if (indefinite) t.gold_number.reset();
      head_col = cols[6];
      t.dep_label = field(cols[7]);
    }
    const auto idx = parse_int(id_col);
    if (!idx || *idx != static_cast<int>(pending.sentence.tokens.size()) + 1) {
      throw ParseError(lineno, "token index '" + std::string(id_col) + "' out of sequence");
    }
    if (head_col != "_") {
      t.head = parse_int(head_col);
      if (!t.head) throw ParseError(lineno, "non-integer head '" + std::string(head_col) + "'");
    }
    if (t.surface.empty()) throw ParseError(lineno, "empty surface");
    finish_token(t);
    pending.sentence.tokens.push_back(std::move(t));
    pending.lines.push_back(lineno);
  }
  close_sentence(pending, out);
  return out;
}

std::vector<Sentence> read_annotated(const std::filesystem::path& path, AnnotatedFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotated corpus " + path.string());
  return read_annotated(in, format);
}

void write_annotated(std::ostream& out, std::span<const Sentence> sentences) {
  auto col = [](const std::optional<std::string>& s) { return s ? *s : std::string("_"); };
  for (const auto& s : sentences) {
    out << "# sent_id = " << s.id << '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      out << (i + 1) << '\t' << t.surface << '\t' << t.lemma << '\t' << col(t.pos) << '\t'
          << col(t.case_tag) << '\t'
          << (t.gold_number ? (*t.gold_number == NumberTag::Singular ? "Sing" : "Plur") : "_")
          << '\t' << (t.head ? std::to_string(*t.head) : std::string("_")) << '\t'
          << col(t.dep_label) << '\n';
    }
    out << '\n';
  }
}

}  // namespace aglab
