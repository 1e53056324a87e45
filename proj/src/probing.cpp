#include "aglab/probing.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "aglab/evaluation.hpp"
#include "aglab/training.hpp"

namespace aglab {

std::string_view to_string(ProbeArch a) {
  switch (a) {
    case ProbeArch::Linear: return "linear";
    case ProbeArch::Mlp1: return "mlp1";
    case ProbeArch::Mlp2: return "mlp2";
  }
  return "?";
}

std::optional<ProbeArch> parse_probe_arch(std::string_view s) {
  for (auto a : {ProbeArch::Linear, ProbeArch::Mlp1, ProbeArch::Mlp2}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::SuffixEligible: return "suffix-eligible";
    case Selector::NuclearSuffixed: return "nuclear-suffixed";
    case Selector::AkSuffixed: return "ak-suffixed";
    case Selector::AllTokens: return "all-tokens";
  }
  return "?";
}

std::optional<Selector> parse_selector(std::string_view s) {
  for (auto x : {Selector::SuffixEligible, Selector::NuclearSuffixed, Selector::AkSuffixed,
                 Selector::AllTokens}) {
    if (to_string(x) == s) return x;
  }
  return std::nullopt;
}

std::string_view to_string(ProbeLabel l) {
  switch (l) {
    case ProbeLabel::ClosestVerb: return "closest-verb";
    case ProbeLabel::NuclearCase: return "nuclear-case";
    case ProbeLabel::Number: return "number";
    case ProbeLabel::CaseTag: return "case";
    case ProbeLabel::AnyCase: return "any-case";
    case ProbeLabel::AkReading: return "ak-reading";
    case ProbeLabel::Pos: return "pos";
    case ProbeLabel::DepLabel: return "dep-label";
  }
  return "?";
}

std::optional<ProbeLabel> parse_probe_label(std::string_view s) {
  for (auto x : {ProbeLabel::ClosestVerb, ProbeLabel::NuclearCase, ProbeLabel::Number,
                 ProbeLabel::CaseTag, ProbeLabel::AnyCase, ProbeLabel::AkReading, ProbeLabel::Pos,
                 ProbeLabel::DepLabel}) {
    if (to_string(x) == s) return x;
  }
  return std::nullopt;
}

// ----------------------------------------------------------------------------
// Records
// ----------------------------------------------------------------------------

ProbeRecord ProbeDataset::record(std::size_t i) const {
  return {states.col(static_cast<Eigen::Index>(i)), labels[i], main_model_correct[i],
          sentence_ids[i], token_indices[i]};
}

ProbeDataset ProbeDataset::subset(std::span<const std::size_t> indices) const {
  ProbeDataset out;
  out.label_names = label_names;
  out.states.resize(states.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = indices[k];
    out.states.col(static_cast<Eigen::Index>(k)) = states.col(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
    out.main_model_correct.push_back(main_model_correct[i]);
    out.sentence_ids.push_back(sentence_ids[i]);
    out.token_indices.push_back(token_indices[i]);
  }
  return out;
}

std::vector<std::size_t> ProbeDataset::label_counts() const {
  std::vector<std::size_t> counts(label_names.size(), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

namespace {

bool is_clause_verb(const GoldClause& c, int position) {
  return c.verb_index == position || c.main_verb_index == position;
}

/// Clause a token belongs to: its attachment, its own verb, or the clause of
/// the nearest ancestor that has one.
int token_clause(const Sentence& s, int position) {
  const auto& clauses = *s.gold_clauses;
  if (clauses.size() == 1) return 0;
  int p = position;
  for (std::size_t hop = 0; hop <= s.tokens.size(); ++hop) {
    const int k = governing_clause(p, clauses);
    if (k >= 0) return k;
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      if (is_clause_verb(clauses[c], p)) return static_cast<int>(c);
    }
    const auto& head = s.tokens[static_cast<std::size_t>(p)].head;
    if (!head || *head <= 0) break;
    p = *head - 1;
  }
  return -1;
}

std::string require(const std::optional<std::string>& field, const char* name,
                    const Sentence& s, std::size_t position) {
  if (!field) {
    throw InvalidInput(std::string("annotation field '") + name + "' missing on token " +
                       std::to_string(position) + " of sentence " + s.id);
  }
  return *field;
}

}  // namespace

std::string probe_label(const Sentence& s, std::size_t position, ProbeLabel kind) {
  const auto& t = s.tokens.at(position);
  switch (kind) {
    case ProbeLabel::ClosestVerb: {
      if (!s.gold_clauses) {
        throw InvalidInput("annotation field 'clauses' missing on sentence " + s.id);
      }
      const int pos = static_cast<int>(position);
      const int k = token_clause(s, pos);
      if (k < 0) {
        throw InvalidInput("token " + std::to_string(position) + " of sentence " + s.id +
                           " has no governing verb");
      }
      const int v = closest_verb(pos, *s.gold_clauses);
      return v >= 0 && is_clause_verb((*s.gold_clauses)[static_cast<std::size_t>(k)], v)
                 ? "connected"
                 : "not-connected";
    }
    case ProbeLabel::NuclearCase:
      return t.gold_case ? std::string(to_string(*t.gold_case)) : "none";
    case ProbeLabel::Number:
      return t.gold_number ? std::string(to_string(*t.gold_number)) : "none";
    case ProbeLabel::CaseTag:
      return require(t.case_tag, "case", s, position);
    case ProbeLabel::AnyCase: {
      const auto tag = require(t.case_tag, "case", s, position);
      return tag == "none" ? "no-case" : "case";
    }
    case ProbeLabel::AkReading:
      if (t.nuclear != NuclearSuffix::Ak || !t.gold_case) {
        throw InvalidInput("token " + std::to_string(position) + " of sentence " + s.id +
                           " is not a gold -ak word");
      }
      return *t.gold_case == CaseRole::Ergative ? "erg-sg" : "abs-pl";
    case ProbeLabel::Pos:
      return require(t.pos, "pos", s, position);
    case ProbeLabel::DepLabel:
      return require(t.dep_label, "dep_label", s, position);
  }
  return {};
}

bool selector_matches(Selector sel, const SuffixTaskInstance& inst, const Token& original,
                      std::size_t position) {
  switch (sel) {
    case Selector::SuffixEligible: return inst.eligible[position];
    case Selector::NuclearSuffixed:
      return inst.eligible[position] && inst.labels[position] != NuclearSuffix::None;
    case Selector::AkSuffixed: return original.nuclear == NuclearSuffix::Ak;
    case Selector::AllTokens: return true;
  }
  return false;
}

ProbeDataset collect_states(const Model& model, const Vocab& vocab, const LemmaLexicon& lexicon,
                            std::span<const Sentence> sentences, Selector selector,
                            ProbeLabel label, std::vector<std::string> label_names,
                            unsigned workers) {
  const bool fixed_labels = !label_names.empty();
  std::map<std::string, int> label_ids;
  for (std::size_t i = 0; i < label_names.size(); ++i) {
    label_ids[label_names[i]] = static_cast<int>(i);
  }
  const auto instances = build_suffix_task(sentences, lexicon);
  WordIndex words;
  const auto set = encode_instances(instances, vocab, words);
  const auto states = all_hidden_states(model, words, set, workers);
  const auto preds = predict_suffix(model, words, set, workers);

  ProbeDataset out;
  std::vector<Eigen::VectorXd> columns;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& sentence = sentences[i];
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      if (!selector_matches(selector, instances[i], sentence.tokens[t], t)) continue;
      const auto name = probe_label(sentence, t, label);
      auto it = label_ids.find(name);
      if (it == label_ids.end()) {
        if (fixed_labels) {
          throw InvalidInput("label '" + name + "' is not in the probe's label table");
        }
        it = label_ids.emplace(name, static_cast<int>(label_names.size())).first;
        label_names.push_back(name);
      }
      columns.push_back(states[i].col(static_cast<Eigen::Index>(t)));
      out.labels.push_back(it->second);
      out.main_model_correct.push_back(preds[i][t] == instances[i].labels[t]);
      out.sentence_ids.push_back(sentence.id);
      out.token_indices.push_back(static_cast<int>(t));
    }
  }
  out.label_names = std::move(label_names);
  out.states.resize(model.dims().state_dim(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out.states.col(static_cast<Eigen::Index>(k)) = columns[k];
  }
  return out;
}

// ----------------------------------------------------------------------------
// Probe training
// ----------------------------------------------------------------------------

void ProbeConfig::validate() const {
  if (mlp1_width < 1) throw ConfigError("mlp1_width", "must be positive");
  if (seeds < 1) throw ConfigError("seeds", "must be at least 1");
  if (epochs < 1) throw ConfigError("epochs", "must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw ConfigError("dev_fraction", "must lie in (0, 1)");
  }
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
}

nlohmann::json ProbeConfig::to_json() const {
  return {{"arch", std::string(to_string(arch))},
          {"mlp1_width", mlp1_width},
          {"seeds", seeds},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"dev_fraction", dev_fraction},
          {"max_records", max_records},
          {"learning_rate", adam.learning_rate},
          {"seed", seed}};
}

ProbeConfig ProbeConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("probe", "expected an object");
  ProbeConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "arch") {
        auto a = parse_probe_arch(value.get<std::string>());
        if (!a) throw ConfigError(key, "unknown probe architecture");
        c.arch = *a;
      } else if (key == "mlp1_width") {
        c.mlp1_width = value.get<int>();
      } else if (key == "seeds") {
        c.seeds = value.get<std::size_t>();
      } else if (key == "epochs") {
        c.epochs = value.get<std::size_t>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<std::size_t>();
      } else if (key == "dev_fraction") {
        c.dev_fraction = value.get<double>();
      } else if (key == "max_records") {
        c.max_records = value.get<std::size_t>();
      } else if (key == "learning_rate") {
        c.adam.learning_rate = value.get<double>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else {
        throw ConfigError(key, "unknown probe key");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key, std::string("wrong type: ") + e.what());
    }
  }
  c.validate();
  return c;
}

Eigen::MatrixXd Probe::logits(const Eigen::MatrixXd& states) const {
  if (constant) throw InvalidInput("a constant probe has no logits");
  Eigen::MatrixXd a = states;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd z = weights[l] * a;
    z.colwise() += biases[l];
    a = l + 1 < weights.size() ? Eigen::MatrixXd(z.array().tanh().matrix()) : z;
  }
  return a;
}

std::vector<int> Probe::predict(const Eigen::MatrixXd& states) const {
  if (constant) return std::vector<int>(static_cast<std::size_t>(states.cols()), *constant);
  const auto z = logits(states);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index j = 0; j < z.cols(); ++j) out[static_cast<std::size_t>(j)] = argmax_first(z.col(j));
  return out;
}

namespace {

std::vector<int> layer_widths(const ProbeConfig& c, int dim, int classes) {
  switch (c.arch) {
    case ProbeArch::Linear: return {dim, classes};
    case ProbeArch::Mlp1: return {dim, c.mlp1_width, classes};
    case ProbeArch::Mlp2: return {dim, 100, 50, classes};
  }
  return {};
}

/// Probe weights living in one flat vector so the shared Adam applies.
class ProbeNet {
 public:
  ProbeNet(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths)) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      w_.push_back({offset, widths_[l + 1], widths_[l]});
      offset += w_.back().size();
      b_.push_back({offset, widths_[l + 1], 1});
      offset += b_.back().size();
    }
    params_.assign(offset, 0.0);
    std::mt19937_64 rng(seed);
    for (const auto& blk : w_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(blk.cols));
      std::uniform_real_distribution<double> u(-bound, bound);
      auto m = view(std::span<double>(params_), blk);
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    }
  }

  std::span<double> params() { return params_; }
  std::size_t size() const { return params_.size(); }

  /// Mean cross-entropy gradient of a batch into `grad`.
  void gradient(const Eigen::MatrixXd& x, std::span<const int> y, std::span<double> grad) const {
    const std::span<const double> p(params_);
    std::vector<Eigen::MatrixXd> acts{x};
    for (std::size_t l = 0; l < w_.size(); ++l) {
      Eigen::MatrixXd z = view(p, w_[l]) * acts.back();
      z.colwise() += view(p, b_[l]).col(0);
      if (l + 1 < w_.size()) z = z.array().tanh().matrix();
      acts.push_back(std::move(z));
    }
    Eigen::MatrixXd d = acts.back();
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double mx = d.col(j).maxCoeff();
      d.col(j) = (d.col(j).array() - mx).exp().matrix();
      d.col(j) /= d.col(j).sum();
      d(y[static_cast<std::size_t>(j)], j) -= 1.0;
    }
    d /= static_cast<double>(x.cols());
    for (std::size_t l = w_.size(); l-- > 0;) {
      view(grad, w_[l]).noalias() += d * acts[l].transpose();
      view(grad, b_[l]) += d.rowwise().sum();
      if (l == 0) break;
      Eigen::MatrixXd da = view(p, w_[l]).transpose() * d;
      d = (da.array() * (1.0 - acts[l].array().square())).matrix();
    }
  }

  Probe to_probe(ProbeArch arch) const {
    Probe out;
    out.arch = arch;
    const std::span<const double> p(params_);
    for (std::size_t l = 0; l < w_.size(); ++l) {
      out.weights.emplace_back(view(p, w_[l]));
      out.biases.emplace_back(view(p, b_[l]).col(0));
    }
    return out;
  }

 private:
  std::vector<int> widths_;
  std::vector<Block> w_, b_;
  AlignedVector params_;
};

double accuracy_of(const Probe& probe, const ProbeDataset& d) {
  if (d.size() == 0) return 0.0;
  const auto pred = probe.predict(d.states);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += pred[i] == d.labels[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

}  // namespace

std::pair<int, std::size_t> majority_label(const ProbeDataset& records) {
  const auto counts = records.label_counts();
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return {best, counts.empty() ? 0 : counts[static_cast<std::size_t>(best)]};
}

ProbeTraining train_probe(const ProbeDataset& records, const ProbeConfig& config) {
  config.validate();
  const auto counts = records.label_counts();
  const auto present = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  if (present < 2) throw InvalidInput("train_probe: records hold fewer than two classes");

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(derive_seed(config.seed, "probe-split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_dev = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.dev_fraction * static_cast<double>(order.size()))));
  if (n_dev >= order.size()) throw InvalidInput("train_probe: too few records to split");
  std::vector<std::size_t> dev_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
  std::sort(dev_idx.begin(), dev_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  const auto train = records.subset(train_idx);
  const auto dev = records.subset(dev_idx);

  ProbeTraining out;
  out.majority_class = majority_label(train).first;
  Probe majority;
  majority.arch = config.arch;
  majority.constant = out.majority_class;
  out.majority_dev_accuracy = accuracy_of(majority, dev);
  out.probe = majority;
  out.selected_dev_accuracy = out.majority_dev_accuracy;

  const auto widths = layer_widths(config, static_cast<int>(records.dim()),
                                   static_cast<int>(records.label_names.size()));
  for (std::size_t s = 0; s < config.seeds; ++s) {
    const std::uint64_t seed = derive_seed(derive_seed(config.seed, "probe-init"), s);
    ProbeNet net(widths, seed);
    AdamState adam(net.size(), config.adam);
    AlignedVector grad(net.size());
    std::mt19937_64 rng(derive_seed(seed, "batches"));
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), 0);
    Eigen::MatrixXd xb;
    std::vector<int> yb;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t b = 0; b < idx.size(); b += config.batch_size) {
        const auto e = std::min(idx.size(), b + config.batch_size);
        xb.resize(train.dim(), static_cast<Eigen::Index>(e - b));
        yb.clear();
        for (std::size_t k = b; k < e; ++k) {
          xb.col(static_cast<Eigen::Index>(k - b)) = train.states.col(static_cast<Eigen::Index>(idx[k]));
          yb.push_back(train.labels[idx[k]]);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        net.gradient(xb, yb, grad);
        adam_step(net.params(), grad, adam);
      }
    }
    auto probe = net.to_probe(config.arch);
    const double acc = accuracy_of(probe, dev);
    out.runs.push_back({seed, acc});
    if (acc > out.selected_dev_accuracy) {
      out.selected_dev_accuracy = acc;
      out.selected = static_cast<int>(s);
      out.probe = std::move(probe);
    }
  }
  return out;
}

// ----------------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------------

std::optional<double> Accuracy::value() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

bool DifferentialReport::identity_holds() const {
  return main_correct.total + main_wrong.total == total.total &&
         main_correct.correct + main_wrong.correct == total.correct;
}

namespace {

nlohmann::json accuracy_json(const Accuracy& a) {
  nlohmann::json v = nullptr;
  if (auto x = a.value()) v = *x;
  return {{"accuracy", v}, {"correct", a.correct}, {"count", a.total}};
}

}  // namespace

nlohmann::json DifferentialReport::to_json(const std::vector<std::string>& label_names) const {
  return {{"arch", std::string(to_string(arch))},
          {"total", accuracy_json(total)},
          {"main_model_correct", accuracy_json(main_correct)},
          {"main_model_wrong", accuracy_json(main_wrong)},
          {"majority", accuracy_json(majority)},
          {"majority_label", label_names.at(static_cast<std::size_t>(majority_class))}};
}

DifferentialReport differential_report(const Probe& probe, const ProbeDataset& records) {
  DifferentialReport r;
  r.arch = probe.arch;
  const auto pred = probe.predict(records.states);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool ok = pred[i] == records.labels[i];
    auto& part = records.main_model_correct[i] ? r.main_correct : r.main_wrong;
    ++part.total;
    ++r.total.total;
    if (ok) {
      ++part.correct;
      ++r.total.correct;
    }
  }
  const auto [label, count] = majority_label(records);
  r.majority_class = label;
  r.majority = {count, records.size()};
  return r;
}

namespace {

struct SuiteProbe {
  const char* property;
  Selector selector;
  ProbeLabel label;
};

constexpr SuiteProbe kSuite[] = {
    {"number", Selector::NuclearSuffixed, ProbeLabel::Number},
    {"nuclear-case", Selector::NuclearSuffixed, ProbeLabel::NuclearCase},
    {"case", Selector::AllTokens, ProbeLabel::CaseTag},
    {"ak-reading", Selector::AkSuffixed, ProbeLabel::AkReading},
    {"pos", Selector::AllTokens, ProbeLabel::Pos},
    {"any-case", Selector::AllTokens, ProbeLabel::AnyCase},
    {"dep-label", Selector::AllTokens, ProbeLabel::DepLabel},
};

/// Records from a growing prefix of the sentences, truncated to `cap`.
ProbeDataset collect_capped(const Model& model, const Vocab& vocab, const LemmaLexicon& lexicon,
                            std::span<const Sentence> sentences, Selector selector,
                            ProbeLabel label, std::size_t cap, unsigned workers) {
  if (cap == 0) return collect_states(model, vocab, lexicon, sentences, selector, label, {}, workers);
  std::size_t take = std::min<std::size_t>(sentences.size(), 1000);
  for (;;) {
    auto d = collect_states(model, vocab, lexicon, sentences.first(take), selector, label, {},
                            workers);
    if (d.size() >= cap || take == sentences.size()) {
      if (d.size() <= cap) return d;
      std::vector<std::size_t> keep(cap);
      std::iota(keep.begin(), keep.end(), 0);
      return d.subset(keep);
    }
    const double per = d.size() == 0 ? 0.0 : static_cast<double>(d.size()) / static_cast<double>(take);
    const auto want = per > 0.0 ? static_cast<std::size_t>(1.1 * static_cast<double>(cap) / per) + 1
                                : take * 4;
    take = std::min(sentences.size(), std::max(want, take * 2));
  }
}

/// Maps records onto another label table; labels missing from it are dropped.
ProbeDataset relabel(const ProbeDataset& d, const std::vector<std::string>& names) {
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < names.size(); ++i) ids[names[i]] = static_cast<int>(i);
  std::vector<std::size_t> keep;
  std::vector<int> labels;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto it = ids.find(d.label_names[static_cast<std::size_t>(d.labels[i])]);
    if (it == ids.end()) continue;
    keep.push_back(i);
    labels.push_back(it->second);
  }
  auto out = d.subset(keep);
  out.labels = std::move(labels);
  out.label_names = names;
  return out;
}

}  // namespace

std::vector<GeneralizationRow> generalization_suite(const Model& model, const Vocab& vocab,
                                                    const LemmaLexicon& lexicon,
                                                    std::span<const Sentence> train_sentences,
                                                    std::span<const Sentence> test_sentences,
                                                    ProbeConfig config, unsigned workers) {
  config.arch = ProbeArch::Mlp2;
  std::vector<GeneralizationRow> rows;
  for (const auto& p : kSuite) {
    GeneralizationRow row;
    row.property = p.property;
    row.selector = p.selector;
    row.label = p.label;
    try {
      auto train = collect_capped(model, vocab, lexicon, train_sentences, p.selector, p.label,
                                  config.max_records, workers);
      auto test = relabel(collect_states(model, vocab, lexicon, test_sentences, p.selector,
                                         p.label, {}, workers),
                          train.label_names);
      auto c = config;
      c.seed = derive_seed(config.seed, p.property);
      const auto trained = train_probe(train, c);
      row.report = differential_report(trained.probe, test);
      row.label_names = train.label_names;
      row.selected_dev_accuracy = trained.selected_dev_accuracy;
      row.majority_dev_accuracy = trained.majority_dev_accuracy;
    } catch (const InvalidInput& e) {
      row.notice = std::string("skipped: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const GeneralizationRow& row) {
  nlohmann::json j{{"property", row.property},
                   {"selector", std::string(to_string(row.selector))},
                   {"label", std::string(to_string(row.label))}};
  if (row.report) {
    j["report"] = row.report->to_json(row.label_names);
    j["labels"] = row.label_names;
    j["selected_dev_accuracy"] = row.selected_dev_accuracy;
    j["majority_dev_accuracy"] = row.majority_dev_accuracy;
  } else {
    j["notice"] = row.notice;
  }
  return j;
}

std::string differential_table(std::span<const DifferentialReport> reports) {
  std::vector<std::vector<std::string>> t{{"Probe", "Total", "Main wrong", "Main correct",
                                           "Majority", "N"}};
  for (const auto& r : reports) {
    t.push_back({std::string(to_string(r.arch)), format_percent(r.total.value()),
                 format_percent(r.main_wrong.value()), format_percent(r.main_correct.value()),
                 format_percent(r.majority.value()), std::to_string(r.total.total)});
  }
  return format_table(t);
}

std::string generalization_table(std::span<const GeneralizationRow> rows) {
  std::vector<std::vector<std::string>> t{{"Property", "Probe", "Main wrong", "Main correct",
                                           "Majority", "N"}};
  for (const auto& r : rows) {
    if (!r.report) {
      t.push_back({r.property, r.notice, "", "", "", ""});
      continue;
    }
    t.push_back({r.property, format_percent(r.report->total.value()),
                 format_percent(r.report->main_wrong.value()),
                 format_percent(r.report->main_correct.value()),
                 format_percent(r.report->majority.value()),
                 std::to_string(r.report->total.total)});
  }
  return format_table(t);
}

// ----------------------------------------------------------------------------
// State dump
// ----------------------------------------------------------------------------

namespace {

constexpr char kDumpMagic[8] = {'A', 'G', 'L', 'A', 'B', 'S', 'T', 'D'};
constexpr std::uint32_t kDumpVersion = 1;

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto n = read_u64(in);
  if (n > (1u << 20)) throw Error("corrupt state dump: string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw Error("truncated state dump");
  return s;
}

}  // namespace

void write_state_dump(const std::filesystem::path& path, const ProbeDataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kDumpMagic, 8);
  write_u32(out, kDumpVersion);
  write_u64(out, static_cast<std::uint64_t>(d.dim()));
  write_u64(out, d.size());
  write_u64(out, d.label_names.size());
  for (const auto& l : d.label_names) write_string(out, l);
  for (std::size_t i = 0; i < d.size(); ++i) {
    write_u64(out, static_cast<std::uint64_t>(d.labels[i]));
    const char flag = d.main_model_correct[i] ? 1 : 0;
    out.write(&flag, 1);
    write_u64(out, static_cast<std::uint64_t>(d.token_indices[i]));
    write_string(out, d.sentence_ids[i]);
    for (Eigen::Index r = 0; r < d.dim(); ++r) write_f64(out, d.states(r, static_cast<Eigen::Index>(i)));
  }
  if (!out) throw Error("failed writing " + path.string());
}

ProbeDataset read_state_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kDumpMagic, 8) != 0) {
    throw Error(path.string() + " is not a state dump");
  }
  if (read_u32(in) != kDumpVersion) throw Error("unsupported state dump version");
  const auto dim = read_u64(in);
  const auto count = read_u64(in);
  const auto n_labels = read_u64(in);
  if (dim > (1u << 16) || n_labels > (1u << 20)) throw Error("corrupt state dump header");
  ProbeDataset d;
  for (std::uint64_t i = 0; i < n_labels; ++i) d.label_names.push_back(read_string(in));
  d.states.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto label = read_u64(in);
    if (label >= n_labels) throw Error("corrupt state dump: label id");
    d.labels.push_back(static_cast<int>(label));
    char flag = 0;
    if (!in.read(&flag, 1)) throw Error("truncated state dump");
    d.main_model_correct.push_back(flag != 0);
    d.token_indices.push_back(static_cast<int>(read_u64(in)));
    d.sentence_ids.push_back(read_string(in));
    for (std::uint64_t r = 0; r < dim; ++r) {
      d.states(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = read_f64(in);
    }
  }
  return d;
}

}  // namespace aglab
