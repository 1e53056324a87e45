#include "aglab/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace aglab {

void TrainConfig::validate() const {
  if (max_updates < 1) throw ConfigError("max_updates", "must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every", "must be at least 1");
  if (patience < 1) throw ConfigError("patience", "must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (!(adam.learning_rate > 0.0) || !std::isfinite(adam.learning_rate)) {
    throw ConfigError("learning_rate", "must be positive");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
  if (embed < 1) throw ConfigError("embed", "must be positive");
  if (hidden < 1) throw ConfigError("hidden", "must be positive");
  if (head_hidden < 1) throw ConfigError("head_hidden", "must be positive");
  if (task == Task::VerbNumber &&
      std::find(ablations.begin(), ablations.end(), Ablation::NoVerb) != ablations.end()) {
    throw ConfigError("ablations", "no-verb applies to the suffix task only");
  }
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json abl = nlohmann::json::array();
  for (auto a : ablations) abl.push_back(std::string(to_string(a)));
  return {{"task", std::string(to_string(task))},
          {"ablations", abl},
          {"max_updates", max_updates},
          {"eval_every", eval_every},
          {"patience", patience},
          {"batch_size", batch_size},
          {"seed", seed},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"variant", std::string(to_string(variant))},
          {"embed", embed},
          {"hidden", hidden},
          {"head_hidden", head_hidden}};
}

namespace {

template <class T>
T get_field(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, std::string("bad value: ") + e.what());
  }
}

}  // namespace

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train", "expected an object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "task") {
      auto t = parse_task(get_field<std::string>(j, key));
      if (!t) throw ConfigError(key, "unknown task");
      c.task = *t;
    } else if (key == "ablations") {
      if (!value.is_array()) throw ConfigError(key, "expected a list");
      c.ablations.clear();
      for (const auto& a : value) {
        auto parsed = a.is_string() ? parse_ablation(a.get<std::string>()) : std::nullopt;
        if (!parsed) throw ConfigError(key, "unknown ablation " + a.dump());
        c.ablations.push_back(*parsed);
      }
    } else if (key == "max_updates") {
      c.max_updates = get_field<std::size_t>(j, key);
    } else if (key == "eval_every") {
      c.eval_every = get_field<std::size_t>(j, key);
    } else if (key == "patience") {
      c.patience = get_field<std::size_t>(j, key);
    } else if (key == "batch_size") {
      c.batch_size = get_field<std::size_t>(j, key);
    } else if (key == "seed") {
      c.seed = get_field<std::uint64_t>(j, key);
    } else if (key == "learning_rate") {
      c.adam.learning_rate = get_field<double>(j, key);
    } else if (key == "beta1") {
      c.adam.beta1 = get_field<double>(j, key);
    } else if (key == "beta2") {
      c.adam.beta2 = get_field<double>(j, key);
    } else if (key == "epsilon") {
      c.adam.epsilon = get_field<double>(j, key);
    } else if (key == "variant") {
      auto v = parse_model_variant(get_field<std::string>(j, key));
      if (!v) throw ConfigError(key, "unknown model variant");
      c.variant = *v;
    } else if (key == "embed") {
      c.embed = get_field<int>(j, key);
    } else if (key == "hidden") {
      c.hidden = get_field<int>(j, key);
    } else if (key == "head_hidden") {
      c.head_hidden = get_field<int>(j, key);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  c.validate();
  return c;
}

nlohmann::json RunManifest::to_json(bool include_wall_clock) const {
  nlohmann::json evals = nlohmann::json::array();
  for (const auto& e : evaluations) {
    evals.push_back({{"step", e.step}, {"dev_metric", e.dev_metric}, {"train_loss", e.train_loss}});
  }
  nlohmann::json j{{"config", config},
                   {"corpus_hash", corpus_hash},
                   {"vocab_hash", vocab_hash},
                   {"evaluations", evals},
                   {"best_step", best_step},
                   {"best_checkpoint", best_checkpoint},
                   {"updates", updates},
                   {"stop_reason", stop_reason}};
  if (diverged_at) {
    j["diverged_at"] = *diverged_at;
    j["divergence"] = divergence_message;
  }
  if (include_wall_clock) j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

std::string RunManifest::metrics_tsv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step\tmetric\tvalue\n";
  for (const auto& e : evaluations) {
    out << e.step << "\ttrain_loss\t" << e.train_loss << '\n';
    out << e.step << "\tdev_metric\t" << e.dev_metric << '\n';
  }
  return out.str();
}

int argmax_first(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

std::vector<AgreementTriple> predict_verb(const Model& model, const WordIndex& words,
                                          const EncodedSet& set, unsigned workers) {
  const auto dists = verb_predictions(model, words, set, workers);
  std::vector<AgreementTriple> out(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (std::size_t r = 0; r < 3; ++r) {
      out[i][kCaseRoles[r]] = kArgNumbers[static_cast<std::size_t>(argmax_first(dists[i][r]))];
    }
  }
  return out;
}

std::vector<std::vector<NuclearSuffix>> predict_suffix(const Model& model, const WordIndex& words,
                                                       const EncodedSet& set, unsigned workers) {
  if (set.task != Task::SuffixRecovery) throw InvalidInput("predict_suffix: not a suffix set");
  const auto dists = suffix_predictions(model, words, set, workers);
  std::vector<std::vector<NuclearSuffix>> out(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (Eigen::Index t = 0; t < dists[i].cols(); ++t) {
      out[i].push_back(kSuffixClasses[static_cast<std::size_t>(argmax_first(dists[i].col(t)))]);
    }
  }
  return out;
}

namespace {

void check_vocab(const Checkpoint& ck, const Vocab& vocab) {
  if (ck.vocab_hash != vocab.hash()) {
    throw InvalidInput("checkpoint was trained with a different vocabulary (hash mismatch)");
  }
}

}  // namespace

std::vector<AgreementTriple> predict_verb(const Checkpoint& ck, const Vocab& vocab,
                                          std::span<const VerbTaskInstance> instances,
                                          unsigned workers) {
  check_vocab(ck, vocab);
  WordIndex words;
  const auto set = encode_instances(instances, vocab, words);
  return predict_verb(ck.model, words, set, workers);
}

std::vector<std::vector<NuclearSuffix>> predict_suffix(const Checkpoint& ck, const Vocab& vocab,
                                                       std::span<const SuffixTaskInstance> instances,
                                                       unsigned workers) {
  check_vocab(ck, vocab);
  WordIndex words;
  const auto set = encode_instances(instances, vocab, words);
  return predict_suffix(ck.model, words, set, workers);
}

double selection_metric(const Model& model, const WordIndex& words, const EncodedSet& dev,
                        unsigned workers) {
  if (dev.size() == 0) throw InvalidInput("selection_metric: empty dev set");
  if (dev.task == Task::VerbNumber) {
    const auto preds = predict_verb(model, words, dev, workers);
    return verb_metrics(preds, dev.verb_labels).mean_accuracy().value_or(0.0);
  }
  const auto preds = predict_suffix(model, words, dev, workers);
  std::vector<NuclearSuffix> flat_pred, flat_gold;
  std::vector<bool> eligible;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    for (std::size_t t = 0; t < preds[i].size(); ++t) {
      const int y = dev.suffix_targets[i][t];
      flat_pred.push_back(preds[i][t]);
      flat_gold.push_back(y == kIneligible ? NuclearSuffix::None
                                           : kSuffixClasses[static_cast<std::size_t>(y)]);
      eligible.push_back(y != kIneligible);
    }
  }
  return suffix_metrics(flat_pred, flat_gold, eligible).macro_f1().value_or(0.0);
}

std::vector<std::vector<std::size_t>> epoch_batches(const EncodedSet& set,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed) {
  if (batch_size == 0) throw InvalidInput("epoch_batches: batch size 0");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t pool = batch_size * 50;
  for (std::size_t begin = 0; begin < order.size(); begin += pool) {
    const auto end = std::min(order.size(), begin + pool);
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return set.sequences[a].size() < set.sequences[b].size();
                     });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const auto end = std::min(order.size(), begin + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

TrainResult train(const TrainConfig& config, const Vocab& vocab, const WordIndex& words,
                  const EncodedSet& train_set, const EncodedSet& dev_set,
                  std::uint64_t corpus_hash_value) {
  config.validate();
  if (train_set.task != config.task || dev_set.task != config.task) {
    throw InvalidInput("train: data sets do not match the configured task");
  }
  if (train_set.size() == 0) throw InvalidInput("train: empty training set");
  if (dev_set.size() == 0) throw InvalidInput("train: empty dev set");
  const auto started = std::chrono::steady_clock::now();

  ModelDims dims;
  dims.embed = config.embed;
  dims.hidden = config.hidden;
  dims.head_hidden = config.head_hidden;
  dims.token_rows = static_cast<int>(vocab.tokens.size());
  dims.lemma_rows = static_cast<int>(vocab.lemmas.size());
  dims.ngram_rows = static_cast<int>(vocab.ngrams.size());
  dims.variant = config.variant;

  Model model = Model::initialize(dims, derive_seed(config.seed, "init"));
  AdamState adam(model.params().size(), config.adam);
  AlignedVector gradient(model.params().size());

  RunManifest manifest;
  manifest.config = config.to_json();
  manifest.corpus_hash = corpus_hash_value;
  manifest.vocab_hash = vocab.hash();

  Checkpoint best{model, manifest.vocab_hash, 0};
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  std::uint64_t step = 0;

  const auto batch_seed = derive_seed(config.seed, "batches");
  std::vector<std::vector<std::size_t>> batches;
  std::size_t next_batch = 0;
  std::uint64_t epoch = 0;

  auto evaluate = [&]() {
    const double metric = selection_metric(model, words, dev_set, config.workers);
    manifest.evaluations.push_back(
        {step, metric, loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0});
    loss_sum = 0.0;
    loss_count = 0;
    if (metric > best_metric) {
      best_metric = metric;
      best.model = model;
      best.step = step;
      stale = 0;
    } else {
      ++stale;
    }
  };

  manifest.stop_reason = "max_updates";
  while (step < config.max_updates) {
    if (next_batch == batches.size()) {
      batches = epoch_batches(train_set, config.batch_size, derive_seed(batch_seed, epoch++));
      next_batch = 0;
    }
    const auto& batch = batches[next_batch++];
    std::fill(gradient.begin(), gradient.end(), 0.0);
    try {
      const double loss = loss_and_gradients(model, words, train_set, batch, gradient, step + 1);
      adam_step(model.params(), gradient, adam);
      loss_sum += loss;
      ++loss_count;
    } catch (const NumericalError& e) {
      manifest.diverged_at = step + 1;
      manifest.divergence_message = e.what();
      manifest.stop_reason = "diverged";
      break;
    }
    ++step;
    if (step % config.eval_every == 0) {
      evaluate();
      if (stale >= config.patience) {
        manifest.stop_reason = "patience";
        break;
      }
    }
  }
  if (!manifest.diverged_at && (manifest.evaluations.empty() ||
                                manifest.evaluations.back().step != step)) {
    evaluate();
  }
  manifest.updates = step;
  manifest.best_step = best.step;
  manifest.best_checkpoint = "step-" + std::to_string(best.step);
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(best), std::move(manifest)};
}

std::uint64_t corpus_hash(std::span<const Sentence> sentences) {
  std::uint64_t h = fnv1a("");
  for (const auto& s : sentences) h = fnv1a(sentence_to_json_line(s), h);
  return h;
}

}  // namespace aglab
