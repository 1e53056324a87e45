#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aglab/datasets.hpp"

namespace aglab {

/// num/den, undefined when den == 0.
struct Ratio {
  std::size_t num = 0;
  std::size_t den = 0;
  std::optional<double> value() const {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

struct RoleMetrics {
  /// Correct 3-way predictions over all instances.
  Ratio accuracy;
  /// Gold-present instances predicted present.
  Ratio presence_recall;
};

struct VerbMetrics {
  std::array<RoleMetrics, 3> roles;  // erg, abs, dat
  std::size_t instances = 0;

  const RoleMetrics& operator[](CaseRole r) const { return roles[static_cast<std::size_t>(r)]; }
  /// Mean of the three per-role accuracies (dev selection metric).
  std::optional<double> mean_accuracy() const;
};

VerbMetrics verb_metrics(std::span<const AgreementTriple> preds,
                         std::span<const AgreementTriple> golds);

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t support() const { return tp + fn; }
  std::optional<double> precision() const;
  std::optional<double> recall() const;
  /// 2TP / (2TP + FP + FN): the harmonic mean of P and R, 0 when either side
  /// has counts but no hit, N/A only when there is nothing to count.
  std::optional<double> f1() const;
};

struct SuffixMetrics {
  std::array<ClassCounts, 5> classes;  // A, Ak, Ek, Ari, Ei
  /// Binary detection of any nuclear suffix.
  ClassCounts any;
  std::size_t eligible = 0;

  const ClassCounts& operator[](NuclearSuffix s) const;
  /// Mean of the defined per-class F1 values.
  std::optional<double> macro_f1() const;
};

/// Flat, aligned position lists; only eligible positions are counted.
SuffixMetrics suffix_metrics(std::span<const NuclearSuffix> preds,
                             std::span<const NuclearSuffix> golds, const std::vector<bool>& eligible);
/// Per-instance predictions against suffix-task instances.
SuffixMetrics suffix_metrics(std::span<const std::vector<NuclearSuffix>> preds,
                             std::span<const SuffixTaskInstance> instances);

enum class Partition { ClosestCorrect, ClosestIncorrect };
std::string_view to_string(Partition p);

struct HardCaseReport {
  /// [partition][class]; counted over eligible, gold-suffixed positions.
  std::array<std::array<ClassCounts, 5>, 2> cells;
  std::array<std::size_t, 2> positions{};

  const ClassCounts& at(Partition p, NuclearSuffix s) const;
};

/// Nearest verb (main verb or auxiliary of any clause) by token distance,
/// the earlier verb on ties; -1 when the sentence has no verb.
int closest_verb(int position, std::span<const GoldClause> clauses);

/// Clause index governing `position`, or -1.
int governing_clause(int position, std::span<const GoldClause> clauses);

/// Throws InvalidInput when an instance lacks gold clauses.
HardCaseReport closest_verb_split(std::span<const SuffixTaskInstance> instances,
                                  std::span<const std::vector<NuclearSuffix>> preds);

// ----------------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------------

nlohmann::json to_json(const Ratio& r);
nlohmann::json to_json(const VerbMetrics& m);
nlohmann::json to_json(const SuffixMetrics& m);
nlohmann::json to_json(const HardCaseReport& r);

/// Inverses of the serializers above; throw InvalidInput on malformed input.
VerbMetrics verb_metrics_from_json(const nlohmann::json& j);
SuffixMetrics suffix_metrics_from_json(const nlohmann::json& j);
HardCaseReport hard_case_from_json(const nlohmann::json& j);

/// Percentage with one decimal, or "N/A".
std::string format_percent(std::optional<double> v);

using VerbRow = std::pair<std::string, VerbMetrics>;
using SuffixRow = std::pair<std::string, SuffixMetrics>;

/// Condition rows with A / R columns per role.
std::string verb_table(std::span<const VerbRow> rows);
/// Per-class precision / recall / F1 for one condition, plus Any.
std::string suffix_detail_table(const SuffixMetrics& m);
/// Condition rows with the F1 of each class, Any and macro-F1.
std::string suffix_condition_table(std::span<const SuffixRow> rows);
std::string hard_case_table(const HardCaseReport& r);

/// Simple aligned text table; first row is the header.
std::string format_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace aglab
