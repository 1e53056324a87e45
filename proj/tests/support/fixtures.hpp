#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "aglab/datasets.hpp"
#include "aglab/grammar.hpp"
#include "aglab/neural.hpp"

namespace aglab::testing {

struct TaskFixture {
  GeneratedCorpus corpus;
  Vocab vocab;
  WordIndex words;
  std::vector<VerbTaskInstance> verb_instances;
  std::vector<SuffixTaskInstance> suffix_instances;
  EncodedSet verb;
  EncodedSet suffix;
};

inline TaskFixture make_fixture(std::size_t sentences, std::uint64_t seed,
                                double multi_clause_rate = 0.3) {
  TaskFixture f;
  GrammarConfig g;
  g.num_sentences = sentences;
  g.seed = seed;
  g.noun_lexicon_size = 40;
  g.multi_clause_rate = multi_clause_rate;
  f.corpus = generate_corpus(g);
  f.vocab = build_vocab(f.corpus.sentences);
  f.verb_instances = build_verb_task(f.corpus.sentences, seed);
  f.suffix_instances = build_suffix_task(f.corpus.sentences, f.corpus.lexicon);
  f.verb = encode_instances(f.verb_instances, f.vocab, f.words);
  f.suffix = encode_instances(f.suffix_instances, f.vocab, f.words);
  return f;
}

inline ModelDims dims_for(const Vocab& v, int embed, int hidden, int head,
                          ModelVariant variant = ModelVariant::Bidirectional) {
  ModelDims d;
  d.embed = embed;
  d.hidden = hidden;
  d.head_hidden = head;
  d.token_rows = static_cast<int>(v.tokens.size());
  d.lemma_rows = static_cast<int>(v.lemmas.size());
  d.ngram_rows = static_cast<int>(v.ngrams.size());
  d.variant = variant;
  return d;
}

// Relative error |a - n| / max(|a|, |n|, floor), n by central differences.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheckResult {
  std::size_t parameters = 0;
  std::size_t failures = 0;
  double max_relative_error = 0.0;
};

inline GradCheckResult gradient_check(Model model, const WordIndex& words, const EncodedSet& set,
                                      const std::vector<std::size_t>& batch, double h = 1e-5,
                                      double tolerance = 1e-4) {
  AlignedVector grad(model.params().size(), 0.0);
  loss_and_gradients(model, words, set, batch, grad);
  GradCheckResult r;
  auto p = model.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up = batch_loss(model, words, set, batch);
    p[i] = saved - h;
    const double down = batch_loss(model, words, set, batch);
    p[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = relative_error(grad[i], numeric);
    r.max_relative_error = std::max(r.max_relative_error, rel);
    r.failures += !(rel < tolerance);
    ++r.parameters;
  }
  return r;
}

}  // namespace aglab::testing
