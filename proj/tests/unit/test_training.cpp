#include <doctest.h>

#include <map>

#include "aglab/training.hpp"
#include "fixtures.hpp"

using namespace aglab;
using namespace aglab::testing;

namespace {

TrainConfig tiny_config(Task task) {
  TrainConfig c;
  c.task = task;
  c.embed = 6;
  c.hidden = 5;
  c.head_hidden = 4;
  c.batch_size = 8;
  c.max_updates = 40;
  c.eval_every = 10;
  c.patience = 3;
  c.seed = 11;
  c.adam.learning_rate = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("argmax takes the first maximum") {
  CHECK(argmax_first(Eigen::Vector3d(0.2, 0.2, 0.1)) == 0);
  CHECK(argmax_first(Eigen::Vector3d(0.1, 0.3, 0.3)) == 1);
  CHECK(argmax_first(Eigen::Vector3d(0.1, 0.2, 0.7)) == 2);
}

TEST_CASE("uniform model predicts by tie order") {
  const auto f = make_fixture(20, 1);
  const Model m(dims_for(f.vocab, 4, 3, 5));
  const auto verbs = predict_verb(m, f.words, f.verb);
  CHECK(verbs.size() == f.verb.size());
  for (const auto& t : verbs) CHECK(t == AgreementTriple{ArgNumber::Sg, ArgNumber::Sg, ArgNumber::Sg});
  const auto suffixes = predict_suffix(m, f.words, f.suffix);
  CHECK(suffixes.size() == f.suffix.size());
  for (std::size_t i = 0; i < suffixes.size(); ++i) {
    CHECK(suffixes[i].size() == f.suffix.sequences[i].size());
    for (auto s : suffixes[i]) CHECK(s == NuclearSuffix::A);
  }
}

TEST_CASE("hand-set head biases reproduce the gold triple") {
  const auto f = make_fixture(1, 5);
  Model m(dims_for(f.vocab, 4, 3, 5));
  const auto gold = f.verb.verb_labels[0];
  for (auto role : kCaseRoles) {
    const auto& head = m.layout().verb_heads[static_cast<std::size_t>(index_of(role))];
    m.view(head.b2)(index_of(gold[role]), 0) = 2.0;
  }
  CHECK(predict_verb(m, f.words, f.verb)[0] == gold);
}

TEST_CASE("word-only predictions ignore context") {
  const auto f = make_fixture(200, 3);
  const auto m = Model::initialize(dims_for(f.vocab, 6, 5, 4, ModelVariant::WordOnly), 2);
  const auto pred = predict_suffix(m, f.words, f.suffix);
  std::map<int, NuclearSuffix> seen;
  std::size_t repeats = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred[i].size(); ++j) {
      const int w = f.suffix.sequences[i][j];
      auto [it, fresh] = seen.emplace(w, pred[i][j]);
      if (!fresh) {
        ++repeats;
        CHECK(it->second == pred[i][j]);
      }
    }
  }
  CHECK(repeats > 100);
}

TEST_CASE("training loss decreases over the first updates") {
  const auto f = make_fixture(8, 2);
  for (const auto* set : {&f.verb, &f.suffix}) {
    auto m = Model::initialize(dims_for(f.vocab, 6, 5, 4), 1);
    AdamState adam(m.params().size(), {.learning_rate = 1e-2});
    std::vector<std::size_t> batch(set->size());
    std::iota(batch.begin(), batch.end(), 0);
    double previous = batch_loss(m, f.words, *set, batch);
    for (int step = 0; step < 10; ++step) {
      AlignedVector g(m.params().size(), 0.0);
      loss_and_gradients(m, f.words, *set, batch, g);
      adam_step(m.params(), g, adam);
      const double now = batch_loss(m, f.words, *set, batch);
      CHECK(now < previous);
      previous = now;
    }
  }
}

TEST_CASE("patience stops after the first non-improving evaluation") {
  const auto f = make_fixture(40, 4);
  auto c = tiny_config(Task::VerbNumber);
  c.patience = 1;
  c.eval_every = 5;
  c.max_updates = 100;
  c.adam.learning_rate = 1e-300;
  const auto r = train(c, f.vocab, f.words, f.verb, f.verb);
  REQUIRE(r.manifest.evaluations.size() == 2);
  CHECK(r.manifest.evaluations[0].step == 5);
  CHECK(r.manifest.evaluations[1].step == 10);
  CHECK(r.manifest.stop_reason == "patience");
  CHECK(r.manifest.updates == 10);
  CHECK(r.manifest.best_step == 5);
}

TEST_CASE("best checkpoint dominates every logged dev metric") {
  const auto f = make_fixture(120, 6);
  for (auto task : {Task::VerbNumber, Task::SuffixRecovery}) {
    const auto c = tiny_config(task);
    const auto& set = task == Task::VerbNumber ? f.verb : f.suffix;
    const auto r = train(c, f.vocab, f.words, set, set);
    double best = -1;
    for (const auto& e : r.manifest.evaluations) best = std::max(best, e.dev_metric);
    const double selected = selection_metric(r.best.model, f.words, set);
    CHECK(selected == best);
    for (const auto& e : r.manifest.evaluations) CHECK(selected >= e.dev_metric);
    bool found = false;
    for (const auto& e : r.manifest.evaluations) found |= e.step == r.manifest.best_step && e.dev_metric == best;
    CHECK(found);
  }
}

TEST_CASE("training is deterministic") {
  const auto f = make_fixture(80, 7);
  const auto c = tiny_config(Task::SuffixRecovery);
  const auto a = train(c, f.vocab, f.words, f.suffix, f.suffix, 5);
  const auto b = train(c, f.vocab, f.words, f.suffix, f.suffix, 5);
  CHECK(a.best.model.hash() == b.best.model.hash());
  CHECK(a.manifest.to_json(false) == b.manifest.to_json(false));
  CHECK(a.manifest.metrics_tsv() == b.manifest.metrics_tsv());
  auto c2 = c;
  c2.seed = 12;
  CHECK(train(c2, f.vocab, f.words, f.suffix, f.suffix).best.model.hash() != a.best.model.hash());
}

TEST_CASE("workers do not change results") {
  const auto f = make_fixture(80, 7);
  auto c = tiny_config(Task::VerbNumber);
  const auto a = train(c, f.vocab, f.words, f.verb, f.verb);
  c.workers = 3;
  const auto b = train(c, f.vocab, f.words, f.verb, f.verb);
  CHECK(a.best.model.hash() == b.best.model.hash());
  CHECK(a.manifest.evaluations == b.manifest.evaluations);
}

TEST_CASE("divergence is recorded") {
  const auto f = make_fixture(20, 2);
  auto c = tiny_config(Task::VerbNumber);
  c.adam.learning_rate = 1e308;
  const auto r = train(c, f.vocab, f.words, f.verb, f.verb);
  CHECK(r.diverged());
  CHECK(r.manifest.stop_reason == "diverged");
  CHECK(r.manifest.to_json().contains("diverged_at"));
}

TEST_CASE("checkpoint predictions refuse another vocabulary") {
  const auto f = make_fixture(20, 2);
  const auto other = make_fixture(20, 3);
  const Checkpoint ck{Model(dims_for(f.vocab, 4, 3, 5)), f.vocab.hash(), 0};
  CHECK(predict_verb(ck, f.vocab, f.verb_instances).size() == f.verb_instances.size());
  CHECK_THROWS_AS(predict_verb(ck, other.vocab, other.verb_instances), InvalidInput);
  CHECK_THROWS_AS(predict_suffix(ck, other.vocab, other.suffix_instances), InvalidInput);
}

TEST_CASE("train config json") {
  auto c = tiny_config(Task::SuffixRecovery);
  c.ablations = {Ablation::NoVerb};
  c.variant = ModelVariant::WordOnly;
  CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json({{"patiense", 2}}), ConfigError);
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  auto v = tiny_config(Task::VerbNumber);
  v.ablations = {Ablation::NoVerb};
  CHECK_THROWS_AS(v.validate(), ConfigError);
}

TEST_CASE("epoch batches cover the set once") {
  const auto f = make_fixture(100, 1);
  const auto batches = epoch_batches(f.suffix, 8, 3);
  std::vector<int> seen(f.suffix.size(), 0);
  for (const auto& b : batches) {
    CHECK(b.size() <= 8);
    for (auto i : b) ++seen[i];
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(epoch_batches(f.suffix, 8, 3) == batches);
}
