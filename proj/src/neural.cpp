#include "aglab/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "aglab/parallel.hpp"

namespace aglab {

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Bidirectional: return "bidirectional";
    case ModelVariant::Unidirectional: return "unidirectional";
    case ModelVariant::WordOnly: return "word-only";
  }
  return "?";
}

std::optional<ModelVariant> parse_model_variant(std::string_view s) {
  for (auto v : {ModelVariant::Bidirectional, ModelVariant::Unidirectional,
                 ModelVariant::WordOnly}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

int ModelDims::state_dim() const {
  switch (variant) {
    case ModelVariant::Bidirectional: return 2 * hidden;
    case ModelVariant::Unidirectional: return hidden;
    case ModelVariant::WordOnly: return embed;
  }
  return 0;
}

ParamLayout::ParamLayout(const ModelDims& d) {
  if (d.embed <= 0 || d.hidden <= 0 || d.head_hidden <= 0) {
    throw ConfigError("dims", "layer sizes must be positive");
  }
  if (d.token_rows < 1 || d.lemma_rows < 1 || d.ngram_rows < 1) {
    throw ConfigError("dims", "embedding tables need at least one row");
  }
  auto next = [this](Eigen::Index rows, Eigen::Index cols) {
    Block b{size, rows, cols};
    size += b.size();
    return b;
  };
  token_table = next(d.embed, d.token_rows);
  lemma_table = next(d.embed, d.lemma_rows);
  ngram_table = next(d.embed, d.ngram_rows);
  for (LstmBlocks* cell : {&forward, &backward}) {
    cell->wx = next(4 * d.hidden, d.embed);
    cell->wh = next(4 * d.hidden, d.hidden);
    cell->bias = next(4 * d.hidden, 1);
  }
  const int in = d.state_dim();
  for (auto& head : verb_heads) {
    head.w1 = next(d.head_hidden, in);
    head.b1 = next(d.head_hidden, 1);
    head.w2 = next(kArgClasses, d.head_hidden);
    head.b2 = next(kArgClasses, 1);
  }
  suffix_head.w1 = next(d.head_hidden, in);
  suffix_head.b1 = next(d.head_hidden, 1);
  suffix_head.w2 = next(kSuffixClassCount, d.head_hidden);
  suffix_head.b2 = next(kSuffixClassCount, 1);
}

Model::Model(const ModelDims& dims) : dims_(dims), layout_(dims), params_(layout_.size, 0.0) {}

Model Model::initialize(const ModelDims& dims, std::uint64_t seed) {
  Model m(dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.1);
  const auto& L = m.layout();
  for (const Block* table : {&L.token_table, &L.lemma_table, &L.ngram_table}) {
    auto v = m.view(*table);
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = gauss(rng);
  }
  auto uniform_fill = [&](const Block& b, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    auto v = m.view(b);
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = u(rng);
  };
  const double recurrent_bound = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  for (const LstmBlocks* cell : {&L.forward, &L.backward}) {
    uniform_fill(cell->wx, recurrent_bound);
    uniform_fill(cell->wh, recurrent_bound);
    m.view(cell->bias).middleRows(dims.hidden, dims.hidden).setOnes();
  }
  auto init_mlp = [&](const MlpBlocks& head) {
    uniform_fill(head.w1, 1.0 / std::sqrt(static_cast<double>(head.w1.cols)));
    uniform_fill(head.w2, 1.0 / std::sqrt(static_cast<double>(head.w2.cols)));
  };
  for (const auto& head : L.verb_heads) init_mlp(head);
  init_mlp(L.suffix_head);
  return m;
}

std::uint64_t Model::hash() const {
  std::uint64_t h = fnv1a(std::string_view(reinterpret_cast<const char*>(params_.data()),
                                           params_.size() * sizeof(double)));
  for (int v : {dims_.embed, dims_.hidden, dims_.head_hidden, dims_.token_rows, dims_.lemma_rows,
                dims_.ngram_rows, static_cast<int>(dims_.variant)}) {
    h = fnv1a(std::to_string(v), h);
  }
  return h;
}

// ----------------------------------------------------------------------------
// Encoded inputs
// ----------------------------------------------------------------------------

EncodedWord encode_word(const Token& token, const Vocab& vocab) {
  EncodedWord w;
  w.token = vocab.tokens.id(token.surface);
  if (is_reserved_symbol(token.surface)) {
    w.reserved = true;
    w.lemma = vocab.lemmas.id(token.surface);
    return w;
  }
  w.lemma = vocab.lemmas.id(token.lemma);
  for (const auto& ng : extract_ngrams(token.surface)) w.ngrams.push_back(vocab.ngrams.id(ng));
  return w;
}

int WordIndex::intern(const Token& token, const Vocab& vocab) {
  std::string key = token.surface;
  key += '\t';
  key += token.lemma;
  auto [it, inserted] = ids_.try_emplace(std::move(key), static_cast<int>(words_.size()));
  if (inserted) words_.push_back(encode_word(token, vocab));
  return it->second;
}

namespace {

WordSequence intern_all(std::span<const Token> tokens, const Vocab& vocab, WordIndex& words) {
  WordSequence seq;
  seq.reserve(tokens.size());
  for (const auto& t : tokens) seq.push_back(words.intern(t, vocab));
  return seq;
}

}  // namespace

EncodedSet encode_instances(std::span<const VerbTaskInstance> instances, const Vocab& vocab,
                            WordIndex& words) {
  EncodedSet set;
  set.task = Task::VerbNumber;
  for (const auto& inst : instances) {
    set.sequences.push_back(intern_all(inst.input_tokens, vocab, words));
    set.mask_index.push_back(inst.mask_index);
    set.verb_labels.push_back(inst.label);
  }
  return set;
}

EncodedSet encode_instances(std::span<const SuffixTaskInstance> instances, const Vocab& vocab,
                            WordIndex& words) {
  EncodedSet set;
  set.task = Task::SuffixRecovery;
  for (const auto& inst : instances) {
    set.sequences.push_back(intern_all(inst.input_tokens, vocab, words));
    std::vector<int> targets(inst.labels.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      targets[i] = inst.eligible[i] ? index_of(inst.labels[i]) : kIneligible;
    }
    set.suffix_targets.push_back(std::move(targets));
  }
  return set;
}

// ----------------------------------------------------------------------------
// Group engine: B sequences of one length T are processed side by side as
// matrix columns (column t*B + b holds position t of member b).
// ----------------------------------------------------------------------------

namespace {

using Eigen::Index;

struct LstmTrace {
  Matrix gates;  // [4H x TB], post-activation
  Matrix cells;
  Matrix hidden;
  Matrix tanh_cells;
};

struct GroupTrace {
  Index steps = 0;
  Index width = 0;
  Matrix inputs;  // [E x TB]
  LstmTrace fwd, bwd;
  Matrix states;  // [D x TB]
};

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void embed_group(const Model& m, const WordIndex& words, const EncodedSet& set,
                 std::span<const std::size_t> members, GroupTrace& g) {
  const auto& L = m.layout();
  const auto tok = m.view(L.token_table);
  const auto lem = m.view(L.lemma_table);
  const auto ngt = m.view(L.ngram_table);
  const Index B = static_cast<Index>(members.size());
  g.inputs.resize(m.dims().embed, g.steps * B);
  for (Index b = 0; b < B; ++b) {
    const auto& seq = set.sequences[members[b]];
    for (Index t = 0; t < g.steps; ++t) {
      const auto& w = words[seq[t]];
      auto x = g.inputs.col(t * B + b);
      x = tok.col(w.token);
      if (w.reserved) continue;
      x += lem.col(w.lemma);
      for (int ng : w.ngrams) x += ngt.col(ng);
    }
  }
}

void run_lstm(const Model& m, const LstmBlocks& blk, const Matrix& X, Index T, Index B,
              bool reverse, LstmTrace& tr) {
  const auto wx = m.view(blk.wx);
  const auto wh = m.view(blk.wh);
  const auto bias = m.view(blk.bias);
  const Index H = wh.cols();
  Matrix Z = wx * X;
  Z.colwise() += bias.col(0);
  tr.gates.resize(4 * H, T * B);
  tr.cells.resize(H, T * B);
  tr.hidden.resize(H, T * B);
  tr.tanh_cells.resize(H, T * B);
  Matrix h_prev = Matrix::Zero(H, B);
  Matrix c_prev = Matrix::Zero(H, B);
  Matrix z(4 * H, B);
  for (Index s = 0; s < T; ++s) {
    const Index t = reverse ? T - 1 - s : s;
    z = Z.middleCols(t * B, B);
    z.noalias() += wh * h_prev;
    auto gates = tr.gates.middleCols(t * B, B);
    gates.topRows(H) = sigmoid(z.topRows(H));
    gates.middleRows(H, H) = sigmoid(z.middleRows(H, H));
    gates.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
    gates.bottomRows(H) = sigmoid(z.bottomRows(H));
    auto c = tr.cells.middleCols(t * B, B);
    c = gates.middleRows(H, H).cwiseProduct(c_prev) +
        gates.topRows(H).cwiseProduct(gates.middleRows(2 * H, H));
    auto tc = tr.tanh_cells.middleCols(t * B, B);
    tc = c.array().tanh().matrix();
    auto h = tr.hidden.middleCols(t * B, B);
    h = gates.bottomRows(H).cwiseProduct(tc);
    h_prev = h;
    c_prev = c;
  }
}

/// Backpropagation through time. dH is the loss gradient w.r.t. the hidden
/// outputs; the input gradient is accumulated into dX.
void backprop_lstm(const Model& m, const LstmBlocks& blk, const Matrix& X, Index T, Index B,
                   bool reverse, const LstmTrace& tr, const Eigen::Ref<const Matrix>& dH,
                   std::span<double> grad, Matrix& dX) {
  const auto wx = m.view(blk.wx);
  const auto wh = m.view(blk.wh);
  const Index H = wh.cols();
  auto g_wx = view(grad, blk.wx);
  auto g_wh = view(grad, blk.wh);
  auto g_b = view(grad, blk.bias);

  Matrix dZ(4 * H, T * B);
  Matrix dh_next = Matrix::Zero(H, B);
  Matrix dc_next = Matrix::Zero(H, B);
  Matrix dh(H, B), dc(H, B);
  for (Index s = T - 1; s >= 0; --s) {
    const Index t = reverse ? T - 1 - s : s;
    const Index tp = reverse ? t + 1 : t - 1;  // previous step in processing order
    const auto gates = tr.gates.middleCols(t * B, B);
    const auto i = gates.topRows(H).array();
    const auto f = gates.middleRows(H, H).array();
    const auto g = gates.middleRows(2 * H, H).array();
    const auto o = gates.bottomRows(H).array();
    const auto tc = tr.tanh_cells.middleCols(t * B, B).array();

    dh = dH.middleCols(t * B, B) + dh_next;
    dc = (dh.array() * o * (1.0 - tc.square())).matrix() + dc_next;
    auto dz = dZ.middleCols(t * B, B);
    dz.topRows(H) = (dc.array() * g * i * (1.0 - i)).matrix();
    if (s > 0) {
      const auto c_prev = tr.cells.middleCols(tp * B, B).array();
      dz.middleRows(H, H) = (dc.array() * c_prev * f * (1.0 - f)).matrix();
    } else {
      dz.middleRows(H, H).setZero();
    }
    dz.middleRows(2 * H, H) = (dc.array() * i * (1.0 - g.square())).matrix();
    dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dc_next = (dc.array() * f).matrix();
    dh_next.noalias() = wh.transpose() * dz;
    if (s > 0) g_wh.noalias() += dz * tr.hidden.middleCols(tp * B, B).transpose();
  }
  g_wx.noalias() += dZ * X.transpose();
  g_b += dZ.rowwise().sum();
  dX.noalias() += wx.transpose() * dZ;
}

void forward_group(const Model& m, const WordIndex& words, const EncodedSet& set,
                   std::span<const std::size_t> members, GroupTrace& g) {
  g.width = static_cast<Index>(members.size());
  g.steps = static_cast<Index>(set.sequences[members.front()].size());
  if (g.steps == 0) throw InvalidInput("cannot encode an empty sequence");
  embed_group(m, words, set, members, g);
  const auto& d = m.dims();
  switch (d.variant) {
    case ModelVariant::WordOnly:
      g.states = g.inputs;
      break;
    case ModelVariant::Unidirectional:
      run_lstm(m, m.layout().forward, g.inputs, g.steps, g.width, false, g.fwd);
      g.states = g.fwd.hidden;
      break;
    case ModelVariant::Bidirectional:
      run_lstm(m, m.layout().forward, g.inputs, g.steps, g.width, false, g.fwd);
      run_lstm(m, m.layout().backward, g.inputs, g.steps, g.width, true, g.bwd);
      g.states.resize(2 * d.hidden, g.steps * g.width);
      g.states.topRows(d.hidden) = g.fwd.hidden;
      g.states.bottomRows(d.hidden) = g.bwd.hidden;
      break;
  }
}

void backward_group(const Model& m, const WordIndex& words, const EncodedSet& set,
                    std::span<const std::size_t> members, const GroupTrace& g,
                    const Matrix& d_states, std::span<double> grad) {
  const auto& d = m.dims();
  const auto& L = m.layout();
  Matrix dX;
  switch (d.variant) {
    case ModelVariant::WordOnly:
      dX = d_states;
      break;
    case ModelVariant::Unidirectional:
      dX = Matrix::Zero(d.embed, g.steps * g.width);
      backprop_lstm(m, L.forward, g.inputs, g.steps, g.width, false, g.fwd, d_states, grad, dX);
      break;
    case ModelVariant::Bidirectional:
      dX = Matrix::Zero(d.embed, g.steps * g.width);
      backprop_lstm(m, L.forward, g.inputs, g.steps, g.width, false, g.fwd,
                    d_states.topRows(d.hidden), grad, dX);
      backprop_lstm(m, L.backward, g.inputs, g.steps, g.width, true, g.bwd,
                    d_states.bottomRows(d.hidden), grad, dX);
      break;
  }
  auto g_tok = view(grad, L.token_table);
  auto g_lem = view(grad, L.lemma_table);
  auto g_ng = view(grad, L.ngram_table);
  for (Index b = 0; b < g.width; ++b) {
    const auto& seq = set.sequences[members[b]];
    for (Index t = 0; t < g.steps; ++t) {
      const auto& w = words[seq[t]];
      const auto dx = dX.col(t * g.width + b);
      g_tok.col(w.token) += dx;
      if (w.reserved) continue;
      g_lem.col(w.lemma) += dx;
      for (int ng : w.ngrams) g_ng.col(ng) += dx;
    }
  }
}

// ----------------------------------------------------------------------------
// Heads
// ----------------------------------------------------------------------------

struct MlpTrace {
  Matrix hidden;
  Matrix logits;
  Matrix probs;
};

void softmax_columns(const Matrix& logits, Matrix& probs) {
  probs.resize(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    probs.col(j) = (logits.col(j).array() - mx).exp().matrix();
    probs.col(j) /= probs.col(j).sum();
  }
}

void mlp_forward(const Model& m, const MlpBlocks& blk, const Matrix& in, MlpTrace& tr) {
  tr.hidden.noalias() = m.view(blk.w1) * in;
  tr.hidden.colwise() += m.view(blk.b1).col(0);
  tr.hidden = tr.hidden.array().tanh().matrix();
  tr.logits.noalias() = m.view(blk.w2) * tr.hidden;
  tr.logits.colwise() += m.view(blk.b2).col(0);
  softmax_columns(tr.logits, tr.probs);
}

/// Single-column head evaluation: the result depends on the input vector
/// alone, independent of how many positions are evaluated together.
Vector mlp_distribution(const Model& m, const MlpBlocks& blk, const Eigen::Ref<const Vector>& in) {
  Vector hidden = m.view(blk.w1) * in + m.view(blk.b1).col(0);
  hidden = hidden.array().tanh().matrix();
  Vector logits = m.view(blk.w2) * hidden + m.view(blk.b2).col(0);
  const double mx = logits.maxCoeff();
  Vector p = (logits.array() - mx).exp().matrix();
  return p / p.sum();
}

double log_prob(const Matrix& logits, Index col, Index cls) {
  const double mx = logits.col(col).maxCoeff();
  const double lse = mx + std::log((logits.col(col).array() - mx).exp().sum());
  return logits(cls, col) - lse;
}

void mlp_backward(const Model& m, const MlpBlocks& blk, const Matrix& in, const MlpTrace& tr,
                  const Matrix& d_logits, std::span<double> grad, Matrix& d_in) {
  view(grad, blk.w2).noalias() += d_logits * tr.hidden.transpose();
  view(grad, blk.b2) += d_logits.rowwise().sum();
  Matrix dz = m.view(blk.w2).transpose() * d_logits;
  dz.array() *= 1.0 - tr.hidden.array().square();
  view(grad, blk.w1).noalias() += dz * in.transpose();
  view(grad, blk.b1) += dz.rowwise().sum();
  d_in.noalias() += m.view(blk.w1).transpose() * dz;
}

/// Batch members ordered by (length, batch position) and cut into runs of
/// equal length.
std::vector<std::vector<std::size_t>> length_groups(const EncodedSet& set,
                                                    std::span<const std::size_t> batch,
                                                    std::size_t max_width) {
  std::vector<std::size_t> order(batch.begin(), batch.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.sequences[a].size() < set.sequences[b].size();
  });
  std::vector<std::vector<std::size_t>> groups;
  for (auto idx : order) {
    if (groups.empty() || groups.back().size() >= max_width ||
        set.sequences[groups.back().front()].size() != set.sequences[idx].size()) {
      groups.emplace_back();
    }
    groups.back().push_back(idx);
  }
  return groups;
}

double run_batch(const Model& m, const WordIndex& words, const EncodedSet& set,
                 std::span<const std::size_t> batch, std::span<double> grad,
                 std::size_t batch_id) {
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != m.layout().size) {
    throw InvalidInput("gradient buffer does not match the parameter layout");
  }
  const auto& L = m.layout();
  double normalizer = 0.0;
  if (set.task == Task::VerbNumber) {
    normalizer = 3.0 * static_cast<double>(batch.size());
  } else {
    for (auto i : batch) {
      for (int y : set.suffix_targets[i]) normalizer += y == kIneligible ? 0.0 : 1.0;
    }
  }
  if (normalizer == 0.0) return 0.0;

  double total = 0.0;
  GroupTrace g;
  MlpTrace head;
  for (const auto& members : length_groups(set, batch, batch.size())) {
    forward_group(m, words, set, members, g);
    const Index B = g.width;
    const Index D = g.states.rows();
    Matrix d_states;
    if (want_grad) d_states = Matrix::Zero(D, g.states.cols());

    if (set.task == Task::VerbNumber) {
      Matrix at_mask(D, B);
      for (Index b = 0; b < B; ++b) {
        at_mask.col(b) = g.states.col(set.mask_index[members[b]] * B + b);
      }
      Matrix d_mask = Matrix::Zero(D, B);
      for (int r = 0; r < 3; ++r) {
        const auto& blk = L.verb_heads[static_cast<std::size_t>(r)];
        mlp_forward(m, blk, at_mask, head);
        Matrix d_logits = head.probs;
        for (Index b = 0; b < B; ++b) {
          const int y = index_of(set.verb_labels[members[b]][kCaseRoles[r]]);
          total -= log_prob(head.logits, b, y);
          d_logits(y, b) -= 1.0;
        }
        if (want_grad) {
          d_logits /= normalizer;
          mlp_backward(m, blk, at_mask, head, d_logits, grad, d_mask);
        }
      }
      if (want_grad) {
        for (Index b = 0; b < B; ++b) {
          d_states.col(set.mask_index[members[b]] * B + b) += d_mask.col(b);
        }
      }
    } else {
      mlp_forward(m, L.suffix_head, g.states, head);
      Matrix d_logits = head.probs;
      for (Index b = 0; b < B; ++b) {
        const auto& targets = set.suffix_targets[members[b]];
        for (Index t = 0; t < g.steps; ++t) {
          const Index c = t * B + b;
          const int y = targets[t];
          if (y == kIneligible) {
            d_logits.col(c).setZero();
            continue;
          }
          total -= log_prob(head.logits, c, y);
          d_logits(y, c) -= 1.0;
        }
      }
      if (want_grad) {
        d_logits /= normalizer;
        mlp_backward(m, L.suffix_head, g.states, head, d_logits, grad, d_states);
      }
    }
    if (want_grad) backward_group(m, words, set, members, g, d_states, grad);
  }
  const double loss = total / normalizer;
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite loss in batch " + std::to_string(batch_id));
  }
  return loss;
}

constexpr std::size_t kInferenceWidth = 64;

template <class Fn>
void for_each_inference_group(const EncodedSet& set, unsigned workers, Fn&& fn) {
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), 0);
  const auto groups = length_groups(set, all, kInferenceWidth);
  parallel_for(groups.size(), workers, [&](std::size_t gi) { fn(groups[gi]); });
}

}  // namespace

// ----------------------------------------------------------------------------
// Public forward API
// ----------------------------------------------------------------------------

Vector embed(const EncodedWord& word, const Model& model) {
  const auto& L = model.layout();
  const auto& d = model.dims();
  if (word.token < 0 || word.token >= d.token_rows || word.lemma < 0 ||
      word.lemma >= d.lemma_rows) {
    throw ConfigError("vocab", "word ids outside the embedding tables");
  }
  Vector x = model.view(L.token_table).col(word.token);
  if (word.reserved) return x;
  x += model.view(L.lemma_table).col(word.lemma);
  const auto ngt = model.view(L.ngram_table);
  for (int ng : word.ngrams) {
    if (ng < 0 || ng >= d.ngram_rows) throw ConfigError("vocab", "ngram id outside the table");
    x += ngt.col(ng);
  }
  return x;
}

Matrix encode(const Matrix& inputs, const Model& model) {
  if (inputs.cols() == 0) throw InvalidInput("encode: empty sequence");
  const auto& d = model.dims();
  if (inputs.rows() != d.embed) throw ConfigError("dims", "input width differs from embed size");
  const Index T = inputs.cols();
  LstmTrace fwd, bwd;
  switch (d.variant) {
    case ModelVariant::WordOnly:
      return inputs;
    case ModelVariant::Unidirectional:
      run_lstm(model, model.layout().forward, inputs, T, 1, false, fwd);
      return fwd.hidden;
    case ModelVariant::Bidirectional: {
      run_lstm(model, model.layout().forward, inputs, T, 1, false, fwd);
      run_lstm(model, model.layout().backward, inputs, T, 1, true, bwd);
      Matrix out(2 * d.hidden, T);
      out.topRows(d.hidden) = fwd.hidden;
      out.bottomRows(d.hidden) = bwd.hidden;
      return out;
    }
  }
  return {};
}

std::array<Eigen::Vector3d, 3> verb_distributions(const Vector& state, const Model& model) {
  if (state.size() != model.dims().state_dim()) {
    throw InvalidInput("verb_distributions: state width mismatch");
  }
  std::array<Eigen::Vector3d, 3> out;
  for (std::size_t r = 0; r < 3; ++r) {
    out[r] = mlp_distribution(model, model.layout().verb_heads[r], state);
  }
  return out;
}

Matrix suffix_distributions(const Matrix& states, const Model& model) {
  if (states.cols() == 0) throw InvalidInput("suffix_distributions: no states");
  if (states.rows() != model.dims().state_dim()) {
    throw InvalidInput("suffix_distributions: state width mismatch");
  }
  Matrix out(kSuffixClassCount, states.cols());
  for (Index j = 0; j < states.cols(); ++j) {
    out.col(j) = mlp_distribution(model, model.layout().suffix_head, states.col(j));
  }
  return out;
}

Matrix hidden_states(const Model& model, const WordIndex& words, const WordSequence& sequence) {
  if (sequence.empty()) throw InvalidInput("hidden_states: empty sequence");
  Matrix inputs(model.dims().embed, static_cast<Index>(sequence.size()));
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    inputs.col(static_cast<Index>(t)) = embed(words[sequence[t]], model);
  }
  return encode(inputs, model);
}

double loss_and_gradients(const Model& model, const WordIndex& words, const EncodedSet& set,
                          std::span<const std::size_t> batch, std::span<double> gradient,
                          std::size_t batch_id) {
  if (gradient.empty()) throw InvalidInput("loss_and_gradients: no gradient buffer");
  return run_batch(model, words, set, batch, gradient, batch_id);
}

double batch_loss(const Model& model, const WordIndex& words, const EncodedSet& set,
                  std::span<const std::size_t> batch) {
  return run_batch(model, words, set, batch, {}, 0);
}

std::vector<std::array<Eigen::Vector3d, 3>> verb_predictions(const Model& model,
                                                             const WordIndex& words,
                                                             const EncodedSet& set,
                                                             unsigned workers) {
  if (set.task != Task::VerbNumber) throw InvalidInput("verb_predictions: not a verb set");
  std::vector<std::array<Eigen::Vector3d, 3>> out(set.size());
  for_each_inference_group(set, workers, [&](const std::vector<std::size_t>& members) {
    GroupTrace g;
    forward_group(model, words, set, members, g);
    for (Index b = 0; b < g.width; ++b) {
      const Vector s = g.states.col(set.mask_index[members[b]] * g.width + b);
      out[members[b]] = verb_distributions(s, model);
    }
  });
  return out;
}

std::vector<Matrix> suffix_predictions(const Model& model, const WordIndex& words,
                                       const EncodedSet& set, unsigned workers) {
  std::vector<Matrix> out(set.size());
  for_each_inference_group(set, workers, [&](const std::vector<std::size_t>& members) {
    GroupTrace g;
    forward_group(model, words, set, members, g);
    for (Index b = 0; b < g.width; ++b) {
      Matrix states(g.states.rows(), g.steps);
      for (Index t = 0; t < g.steps; ++t) states.col(t) = g.states.col(t * g.width + b);
      out[members[b]] = suffix_distributions(states, model);
    }
  });
  return out;
}

std::vector<Matrix> all_hidden_states(const Model& model, const WordIndex& words,
                                      const EncodedSet& set, unsigned workers) {
  std::vector<Matrix> out(set.size());
  for_each_inference_group(set, workers, [&](const std::vector<std::size_t>& members) {
    GroupTrace g;
    forward_group(model, words, set, members, g);
    for (Index b = 0; b < g.width; ++b) {
      Matrix states(g.states.rows(), g.steps);
      for (Index t = 0; t < g.steps; ++t) states.col(t) = g.states.col(t * g.width + b);
      out[members[b]] = std::move(states);
    }
  });
  return out;
}

// ----------------------------------------------------------------------------
// Adam
// ----------------------------------------------------------------------------

void adam_step(std::span<double> params, std::span<const double> gradient, AdamState& state) {
  const std::size_t n = params.size();
  if (gradient.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw InvalidInput("adam_step: misaligned parameter, gradient and moment vectors");
  }
  using Arr = Eigen::Map<Eigen::ArrayXd>;
  using ConstArr = Eigen::Map<const Eigen::ArrayXd>;
  const Eigen::Index len = static_cast<Eigen::Index>(n);
  ConstArr g(gradient.data(), len);
  if (!g.allFinite()) {
    std::size_t bad = 0;
    while (std::isfinite(gradient[bad])) ++bad;
    throw NumericalError("adam_step: non-finite gradient at parameter " + std::to_string(bad));
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  Arr m(state.first_moment.data(), len);
  Arr v(state.second_moment.data(), len);
  Arr p(params.data(), len);
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.square();
  p -= c.learning_rate * (m / correction1) / ((v / correction2).sqrt() + c.epsilon);
}

// ----------------------------------------------------------------------------
// Binary I/O
// ----------------------------------------------------------------------------

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("unexpected end of binary file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("unexpected end of binary file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

namespace {
constexpr char kCheckpointMagic[8] = {'A', 'G', 'L', 'A', 'B', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  const auto& d = ck.model.dims();
  out.write(kCheckpointMagic, 8);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(d.variant));
  for (int v : {d.embed, d.hidden, d.head_hidden, d.token_rows, d.lemma_rows, d.ngram_rows}) {
    write_u64(out, static_cast<std::uint64_t>(v));
  }
  write_u64(out, ck.vocab_hash);
  write_u64(out, ck.step);
  const auto params = ck.model.params();
  write_u64(out, params.size());
  for (double p : params) write_f64(out, p);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error(path.string() + " is not a checkpoint");
  }
  if (read_u32(in) != kCheckpointVersion) throw Error("unsupported checkpoint version");
  ModelDims d;
  const auto variant = read_u32(in);
  if (variant > 2) throw Error("corrupt checkpoint: bad model variant");
  d.variant = static_cast<ModelVariant>(variant);
  for (int* v : {&d.embed, &d.hidden, &d.head_hidden, &d.token_rows, &d.lemma_rows,
                 &d.ngram_rows}) {
    *v = static_cast<int>(read_u64(in));
  }
  const auto vocab_hash = read_u64(in);
  if (vocab_hash != expected_vocab_hash) {
    throw InvalidInput("checkpoint " + path.string() +
                       " was trained with a different vocabulary (hash mismatch)");
  }
  const auto step = read_u64(in);
  Checkpoint ck{Model(d), vocab_hash, step};
  const auto count = read_u64(in);
  if (count != ck.model.params().size()) throw Error("corrupt checkpoint: parameter count");
  for (double& p : ck.model.params()) p = read_f64(in);
  return ck;
}

}  // namespace aglab
