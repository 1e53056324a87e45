#include "aglab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

namespace aglab {

std::optional<double> VerbMetrics::mean_accuracy() const {
  double sum = 0.0;
  for (const auto& r : roles) {
    const auto v = r.accuracy.value();
    if (!v) return std::nullopt;
    sum += *v;
  }
  return sum / 3.0;
}

VerbMetrics verb_metrics(std::span<const AgreementTriple> preds,
                         std::span<const AgreementTriple> golds) {
  if (preds.size() != golds.size()) {
    throw InvalidInput("verb_metrics: " + std::to_string(preds.size()) + " predictions for " +
                       std::to_string(golds.size()) + " gold triples");
  }
  VerbMetrics m;
  m.instances = golds.size();
  for (std::size_t i = 0; i < golds.size(); ++i) {
    for (CaseRole role : kCaseRoles) {
      auto& r = m.roles[static_cast<std::size_t>(role)];
      const ArgNumber g = golds[i][role];
      const ArgNumber p = preds[i][role];
      ++r.accuracy.den;
      if (p == g) ++r.accuracy.num;
      if (g != ArgNumber::None) {
        ++r.presence_recall.den;
        if (p != ArgNumber::None) ++r.presence_recall.num;
      }
    }
  }
  return m;
}

std::optional<double> ClassCounts::precision() const { return Ratio{tp, tp + fp}.value(); }
std::optional<double> ClassCounts::recall() const { return Ratio{tp, tp + fn}.value(); }
std::optional<double> ClassCounts::f1() const { return Ratio{2 * tp, 2 * tp + fp + fn}.value(); }

const ClassCounts& SuffixMetrics::operator[](NuclearSuffix s) const {
  if (s == NuclearSuffix::None) throw InvalidInput("None is not a scored suffix class");
  return classes[static_cast<std::size_t>(index_of(s))];
}

std::optional<double> SuffixMetrics::macro_f1() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : classes) {
    if (auto f = c.f1()) {
      sum += *f;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

namespace {

void count_position(NuclearSuffix p, NuclearSuffix g, std::array<ClassCounts, 5>& classes) {
  if (p == g) {
    if (g != NuclearSuffix::None) ++classes[static_cast<std::size_t>(index_of(g))].tp;
    return;
  }
  if (p != NuclearSuffix::None) ++classes[static_cast<std::size_t>(index_of(p))].fp;
  if (g != NuclearSuffix::None) ++classes[static_cast<std::size_t>(index_of(g))].fn;
}

void count_any(NuclearSuffix p, NuclearSuffix g, ClassCounts& any) {
  const bool gp = g != NuclearSuffix::None;
  const bool pp = p != NuclearSuffix::None;
  if (gp && pp) ++any.tp;
  if (!gp && pp) ++any.fp;
  if (gp && !pp) ++any.fn;
}

}  // namespace

SuffixMetrics suffix_metrics(std::span<const NuclearSuffix> preds,
                             std::span<const NuclearSuffix> golds,
                             const std::vector<bool>& eligible) {
  if (preds.size() != golds.size() || eligible.size() != golds.size()) {
    throw InvalidInput("suffix_metrics: predictions, gold labels and eligibility differ in length");
  }
  SuffixMetrics m;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (!eligible[i]) continue;
    ++m.eligible;
    count_position(preds[i], golds[i], m.classes);
    count_any(preds[i], golds[i], m.any);
  }
  return m;
}

SuffixMetrics suffix_metrics(std::span<const std::vector<NuclearSuffix>> preds,
                             std::span<const SuffixTaskInstance> instances) {
  if (preds.size() != instances.size()) {
    throw InvalidInput("suffix_metrics: prediction count differs from instance count");
  }
  SuffixMetrics total;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto m = suffix_metrics(preds[i], instances[i].labels, instances[i].eligible);
    for (std::size_t c = 0; c < 5; ++c) {
      total.classes[c].tp += m.classes[c].tp;
      total.classes[c].fp += m.classes[c].fp;
      total.classes[c].fn += m.classes[c].fn;
    }
    total.any.tp += m.any.tp;
    total.any.fp += m.any.fp;
    total.any.fn += m.any.fn;
    total.eligible += m.eligible;
  }
  return total;
}

std::string_view to_string(Partition p) {
  return p == Partition::ClosestCorrect ? "closest-correct" : "closest-incorrect";
}

const ClassCounts& HardCaseReport::at(Partition p, NuclearSuffix s) const {
  if (s == NuclearSuffix::None) throw InvalidInput("None is not a scored suffix class");
  return cells[static_cast<std::size_t>(p)][static_cast<std::size_t>(index_of(s))];
}

int closest_verb(int position, std::span<const GoldClause> clauses) {
  int best = -1;
  int best_distance = 0;
  for (const auto& c : clauses) {
    for (int v : {c.main_verb_index, c.verb_index}) {
      if (v < 0) continue;
      const int d = std::abs(v - position);
      if (best < 0 || d < best_distance || (d == best_distance && v < best)) {
        best = v;
        best_distance = d;
      }
    }
  }
  return best;
}

int governing_clause(int position, std::span<const GoldClause> clauses) {
  for (std::size_t k = 0; k < clauses.size(); ++k) {
    for (const auto& a : clauses[k].argument_attachments) {
      if (a.position == position) return static_cast<int>(k);
    }
  }
  return -1;
}

HardCaseReport closest_verb_split(std::span<const SuffixTaskInstance> instances,
                                  std::span<const std::vector<NuclearSuffix>> preds) {
  if (preds.size() != instances.size()) {
    throw InvalidInput("closest_verb_split: prediction count differs from instance count");
  }
  HardCaseReport r;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (!inst.gold_clauses) {
      throw InvalidInput("closest_verb_split: sentence " + inst.sentence_id +
                         " has no gold clause attachments; use a synthetic corpus or an "
                         "annotated corpus with gold clauses");
    }
    const auto& clauses = *inst.gold_clauses;
    if (preds[i].size() != inst.labels.size()) {
      throw InvalidInput("closest_verb_split: prediction length differs for " + inst.sentence_id);
    }
    for (std::size_t t = 0; t < inst.labels.size(); ++t) {
      if (!inst.eligible[t] || inst.labels[t] == NuclearSuffix::None) continue;
      const int pos = static_cast<int>(t);
      const int k = governing_clause(pos, clauses);
      const int v = closest_verb(pos, clauses);
      bool correct = false;
      if (k >= 0 && v >= 0) {
        const auto& c = clauses[static_cast<std::size_t>(k)];
        correct = v == c.verb_index || v == c.main_verb_index;
      }
      const auto part = static_cast<std::size_t>(correct ? Partition::ClosestCorrect
                                                         : Partition::ClosestIncorrect);
      ++r.positions[part];
      count_position(preds[i][t], inst.labels[t], r.cells[part]);
    }
  }
  return r;
}

// ----------------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------------

namespace {

nlohmann::json optional_json(std::optional<double> v) {
  if (!v) return nullptr;
  return *v;
}

nlohmann::json counts_json(const ClassCounts& c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"support", c.support()},
          {"precision", optional_json(c.precision())},
          {"recall", optional_json(c.recall())},
          {"f1", optional_json(c.f1())}};
}

}  // namespace

nlohmann::json to_json(const Ratio& r) {
  return {{"value", optional_json(r.value())}, {"count", r.num}, {"support", r.den}};
}

nlohmann::json to_json(const VerbMetrics& m) {
  nlohmann::json j;
  j["instances"] = m.instances;
  for (CaseRole role : kCaseRoles) {
    const auto& r = m[role];
    j["roles"][std::string(to_string(role))] = {{"accuracy", to_json(r.accuracy)},
                                               {"presence_recall", to_json(r.presence_recall)}};
  }
  j["mean_accuracy"] = optional_json(m.mean_accuracy());
  return j;
}

nlohmann::json to_json(const SuffixMetrics& m) {
  nlohmann::json j;
  j["eligible"] = m.eligible;
  for (NuclearSuffix s : kScoredSuffixes) j["classes"][std::string(to_string(s))] = counts_json(m[s]);
  j["any"] = counts_json(m.any);
  j["macro_f1"] = optional_json(m.macro_f1());
  return j;
}

nlohmann::json to_json(const HardCaseReport& r) {
  nlohmann::json j;
  for (Partition p : {Partition::ClosestCorrect, Partition::ClosestIncorrect}) {
    auto& part = j[std::string(to_string(p))];
    part["positions"] = r.positions[static_cast<std::size_t>(p)];
    for (NuclearSuffix s : kScoredSuffixes) {
      part["classes"][std::string(to_string(s))] = counts_json(r.at(p, s));
    }
  }
  return j;
}

namespace {

Ratio ratio_from_json(const nlohmann::json& j) {
  return {j.at("count").get<std::size_t>(), j.at("support").get<std::size_t>()};
}

ClassCounts counts_from_json(const nlohmann::json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
          j.at("fn").get<std::size_t>()};
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed ") + what + " JSON: " + e.what());
  }
}

}  // namespace

VerbMetrics verb_metrics_from_json(const nlohmann::json& j) {
  return guarded("verb metrics", [&] {
    VerbMetrics m;
    m.instances = j.at("instances").get<std::size_t>();
    for (CaseRole role : kCaseRoles) {
      const auto& r = j.at("roles").at(std::string(to_string(role)));
      m.roles[static_cast<std::size_t>(role)] = {ratio_from_json(r.at("accuracy")),
                                                 ratio_from_json(r.at("presence_recall"))};
    }
    return m;
  });
}

SuffixMetrics suffix_metrics_from_json(const nlohmann::json& j) {
  return guarded("suffix metrics", [&] {
    SuffixMetrics m;
    m.eligible = j.at("eligible").get<std::size_t>();
    for (std::size_t k = 0; k < kScoredSuffixes.size(); ++k) {
      m.classes[k] = counts_from_json(j.at("classes").at(std::string(to_string(kScoredSuffixes[k]))));
    }
    m.any = counts_from_json(j.at("any"));
    return m;
  });
}

HardCaseReport hard_case_from_json(const nlohmann::json& j) {
  return guarded("closest-verb report", [&] {
    HardCaseReport r;
    for (Partition p : {Partition::ClosestCorrect, Partition::ClosestIncorrect}) {
      const auto& part = j.at(std::string(to_string(p)));
      const auto pi = static_cast<std::size_t>(p);
      r.positions[pi] = part.at("positions").get<std::size_t>();
      for (std::size_t k = 0; k < kScoredSuffixes.size(); ++k) {
        r.cells[pi][k] = counts_from_json(part.at("classes").at(std::string(to_string(kScoredSuffixes[k]))));
      }
    }
    return r;
  });
}

std::string format_percent(std::optional<double> v) {
  if (!v) return "N/A";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const auto& cell = rows[r][c];
      const std::string pad(widths[c] - cell.size(), ' ');
      if (c == 0) {
        out += cell + pad;
      } else {
        out += "  " + pad + cell;
      }
    }
    out += '\n';
    if (r == 0) {
      const std::size_t total =
          std::accumulate(widths.begin(), widths.end(), std::size_t{0}) + 2 * (widths.size() - 1);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

std::string verb_table(std::span<const VerbRow> rows) {
  std::vector<std::vector<std::string>> t{
      {"Condition", "Erg A", "Erg R", "Abs A", "Abs R", "Dat A", "Dat R", "N"}};
  for (const auto& [name, m] : rows) {
    std::vector<std::string> row{name};
    for (CaseRole role : kCaseRoles) {
      row.push_back(format_percent(m[role].accuracy.value()));
      row.push_back(format_percent(m[role].presence_recall.value()));
    }
    row.push_back(std::to_string(m.instances));
    t.push_back(std::move(row));
  }
  return format_table(t);
}

std::string suffix_detail_table(const SuffixMetrics& m) {
  std::vector<std::vector<std::string>> t{{"Suffix", "P", "R", "F1", "Support"}};
  auto add = [&](std::string name, const ClassCounts& c) {
    t.push_back({std::move(name), format_percent(c.precision()), format_percent(c.recall()),
                 format_percent(c.f1()), std::to_string(c.support())});
  };
  for (NuclearSuffix s : kScoredSuffixes) add("-" + std::string(to_string(s)), m[s]);
  add("Any", m.any);
  return format_table(t);
}

std::string suffix_condition_table(std::span<const SuffixRow> rows) {
  std::vector<std::vector<std::string>> t{{"Condition"}};
  for (NuclearSuffix s : kScoredSuffixes) t[0].push_back("-" + std::string(to_string(s)));
  t[0].push_back("Any");
  t[0].push_back("Macro");
  for (const auto& [name, m] : rows) {
    std::vector<std::string> row{name};
    for (NuclearSuffix s : kScoredSuffixes) row.push_back(format_percent(m[s].f1()));
    row.push_back(format_percent(m.any.f1()));
    row.push_back(format_percent(m.macro_f1()));
    t.push_back(std::move(row));
  }
  return format_table(t);
}

std::string hard_case_table(const HardCaseReport& r) {
  std::vector<std::vector<std::string>> t{{"Suffix", "Partition", "R", "P", "F1", "N"}};
  for (NuclearSuffix s : kScoredSuffixes) {
    for (Partition p : {Partition::ClosestCorrect, Partition::ClosestIncorrect}) {
      const auto& c = r.at(p, s);
      t.push_back({"-" + std::string(to_string(s)), std::string(to_string(p)),
                   format_percent(c.recall()), format_percent(c.precision()),
                   format_percent(c.f1()), std::to_string(c.support())});
    }
  }
  return format_table(t);
}

}  // namespace aglab
