#pragma once

#include <array>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "fimnet/autodiff.hpp"
#include "fimnet/errors.hpp"
#include "fimnet/features.hpp"
#include "fimnet/partition.hpp"
#include "fimnet/rng.hpp"
#include "fimnet/tensor.hpp"

namespace fimnet {

struct BlockSpec {
  int in_channels = 0;
  int out_channels = 0;
  int temporal_stride = 1;
};

struct ModelConfig {
  std::vector<BlockSpec> blocks = {{kFeatureChannels, 64, 1}, {64, 64, 2}, {64, 128, 2}};
  int temporal_kernel = 9;
  int lstm_hidden = 64;
  int attention_hidden = 64;
  int class_count = 2;
  bool use_bilstm = true;
  bool use_attention = true;
  FeatureMask feature_mask;

  int backbone_channels() const { return blocks.back().out_channels; }
  int output_channels() const {
    return use_bilstm ? 2 * lstm_hidden : backbone_channels();
  }
  int output_frames(int input_frames) const {
    int t = input_frames;
    for (const auto& b : blocks) t = (t + b.temporal_stride - 1) / b.temporal_stride;
    return t;
  }
  int temporal_downsample() const {
    int s = 1;
    for (const auto& b : blocks) s *= b.temporal_stride;
    return s;
  }

  void validate() const;

  // Reduced instantiation for gradient checks and fast tests.
  static ModelConfig tiny();
};

void to_json_config(const ModelConfig& config, std::string& out);
ModelConfig config_from_json(const std::string& text);

// Named parameter tensors with matching gradient buffers, in a fixed
// declaration order that the checkpoint format and optimizer follow.
template <class Real>
struct ParameterStore {
  struct Entry {
    std::string name;
    Tensor<Real> value;
    Tensor<Real> grad;
  };

  std::vector<Entry> entries;
  std::unordered_map<std::string, int> index;

  int add(const std::string& name, std::vector<int> shape) {
    Entry e;
    e.name = name;
    e.value = Tensor<Real>::zeros(shape);
    e.grad = Tensor<Real>::zeros(std::move(shape));
    entries.push_back(std::move(e));
    index[name] = static_cast<int>(entries.size()) - 1;
    return static_cast<int>(entries.size()) - 1;
  }

  Entry& at(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw ConfigError("unknown parameter group: " + name);
    return entries[static_cast<std::size_t>(it->second)];
  }
  const Entry& at(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->at(name);
  }

  void zero_grad() {
    for (auto& e : entries) e.grad.fill(Real(0));
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries) n += e.value.numel();
    return n;
  }

  template <class Other>
  ParameterStore<Other> cast() const {
    ParameterStore<Other> out;
    for (const auto& e : entries) {
      out.add(e.name, e.value.shape);
      out.entries.back().value = e.value.template cast<Other>();
    }
    return out;
  }
};

// Allocates every parameter group the config describes (enabled or not, so
// shapes depend only on config and J) and fills weights uniformly in
// +-sqrt(6 / (fan_in + fan_out)), biases with zero, edge masks with one.
template <class Real>
ParameterStore<Real> init_parameters(const ModelConfig& config, int joint_count,
                                     std::uint64_t seed);

// Partition constants cast to the arithmetic type once per model.
template <class Real>
struct GraphConstants {
  int joint_count = 0;
  std::array<Tensor<Real>, 3> adjacency;
  std::array<std::vector<Real>, 3> inv_sqrt_degree;

  static GraphConstants from(const Partition& p) {
    GraphConstants g;
    g.joint_count = p.node_count;
    for (int m = 0; m < 3; ++m) {
      g.adjacency[static_cast<std::size_t>(m)] =
          p.adjacency[static_cast<std::size_t>(m)].template cast<Real>();
      const auto& inv = p.inv_sqrt_degree[static_cast<std::size_t>(m)];
      g.inv_sqrt_degree[static_cast<std::size_t>(m)].assign(inv.begin(), inv.end());
    }
    return g;
  }
};

// Handles into the tape for everything callers inspect after a pass.
struct ForwardHandles {
  ad::Var input;        // the [9 x T x J] leaf
  ad::Var probs;        // [K]
  ad::Var logits;       // [K]
  ad::Var z_out;        // [C_out]
  ad::Var alpha;        // [T_out x J], invalid when attention is off
  ad::Var beta;         // [T_out], invalid when attention is off
  ad::Var loss;         // scalar, invalid when no label was given
  std::vector<ad::Var> relu_pre;  // pre-activation of every ReLU, for smoothness probes
  int t_out = 0;
};

// Copies of the distributions a pass produced, for metrics and export.
struct Activations {
  Tensor<double> probabilities;  // [K]
  Tensor<double> alpha;          // [T_out x J] (empty when attention off)
  Tensor<double> beta;           // [T_out]
  Tensor<double> z_out;          // [C_out]
};

// Records the full forward computation on the tape. `label` < 0 skips the
// loss node. Parameters are registered as differentiable leaves in store
// order; read their gradients back with store_gradients().
template <class Real>
ForwardHandles forward(ad::Tape<Real>& tape, const GraphConstants<Real>& graph,
                       const ModelConfig& config, const ParameterStore<Real>& params,
                       const Tensor<Real>& input, int label = -1);

// Adds tape gradients of the parameter leaves into store.grad, scaled.
template <class Real>
void accumulate_gradients(ad::Tape<Real>& tape, const std::vector<ad::Var>& leaves,
                          ParameterStore<Real>& store, Real scale_factor);

// The leaves forward() registered, in store order; needed for gradient readback.
template <class Real>
std::vector<ad::Var> bind_parameters(ad::Tape<Real>& tape, const ParameterStore<Real>& params);

template <class Real>
ForwardHandles forward_bound(ad::Tape<Real>& tape, const GraphConstants<Real>& graph,
                             const ModelConfig& config, const std::vector<ad::Var>& leaves,
                             const ParameterStore<Real>& params, const Tensor<Real>& input,
                             int label = -1);

template <class Real>
Activations extract_activations(const ad::Tape<Real>& tape, const ForwardHandles& h);

// Plain scalar form of the loss, for callers outside the tape.
double cross_entropy_value(const std::vector<double>& probs, const std::vector<double>& one_hot);

// ---------------------------------------------------------------------------
// implementation
// ---------------------------------------------------------------------------

inline void ModelConfig::validate() const {
  if (blocks.empty()) throw ConfigError("model needs at least one block");
  if (blocks.front().in_channels != kFeatureChannels)
    throw ConfigError("first block must take " + std::to_string(kFeatureChannels) + " channels");
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i)
    if (blocks[i].out_channels != blocks[i + 1].in_channels)
      throw ConfigError("block channel chain is inconsistent");
  for (const auto& b : blocks)
    if (b.temporal_stride < 1) throw ConfigError("temporal stride must be >= 1");
  if (temporal_kernel < 1 || temporal_kernel % 2 == 0)
    throw ConfigError("temporal kernel must be odd and >= 1");
  if (class_count < 2) throw ConfigError("class count must be >= 2");
  if (lstm_hidden < 1 || attention_hidden < 1)
    throw ConfigError("hidden widths must be >= 1");
}

inline ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.blocks = {{kFeatureChannels, 4, 1}, {4, 4, 1}};
  c.temporal_kernel = 3;
  c.lstm_hidden = 4;
  c.attention_hidden = 4;
  return c;
}

template <class Real>
ParameterStore<Real> init_parameters(const ModelConfig& config, int joint_count,
                                     std::uint64_t seed) {
  config.validate();
  ParameterStore<Real> store;
  Rng rng(derive_seed(seed, 0x70617261ULL));

  auto glorot = [&rng](Tensor<Real>& w, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (Real& v : w.data) v = static_cast<Real>(rng.uniform(-bound, bound));
  };

  for (std::size_t l = 0; l < config.blocks.size(); ++l) {
    const auto& b = config.blocks[l];
    const std::string prefix = "block" + std::to_string(l + 1) + ".";
    for (int m = 0; m < 3; ++m) {
      auto& e = store.entries[static_cast<std::size_t>(
          store.add(prefix + "w" + std::to_string(m), {b.out_channels, b.in_channels}))];
      glorot(e.value, b.in_channels, b.out_channels);
    }
    auto& mask = store.entries[static_cast<std::size_t>(
        store.add(prefix + "edge_mask", {joint_count, joint_count}))];
    mask.value.fill(Real(1));
    auto& tw = store.entries[static_cast<std::size_t>(store.add(
        prefix + "tconv.weight", {config.temporal_kernel, b.out_channels, b.out_channels}))];
    glorot(tw.value, b.out_channels * config.temporal_kernel, b.out_channels);
    store.add(prefix + "tconv.bias", {b.out_channels});
  }

  const int backbone = config.backbone_channels();
  const int hidden = config.lstm_hidden;
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string prefix = std::string("lstm.") + dir + ".";
    auto& wx = store.entries[static_cast<std::size_t>(
        store.add(prefix + "w_input", {4 * hidden, backbone}))];
    glorot(wx.value, backbone, 4 * hidden);
    auto& wh = store.entries[static_cast<std::size_t>(
        store.add(prefix + "w_recur", {4 * hidden, hidden}))];
    glorot(wh.value, hidden, 4 * hidden);
    store.add(prefix + "bias", {4 * hidden});
  }

  const int c_out = config.output_channels();
  for (const char* which : {"spatial", "temporal"}) {
    const std::string prefix = std::string("attn.") + which + ".";
    auto& w1 = store.entries[static_cast<std::size_t>(
        store.add(prefix + "w1", {config.attention_hidden, c_out}))];
    glorot(w1.value, c_out, config.attention_hidden);
    store.add(prefix + "b1", {config.attention_hidden});
    auto& w2 = store.entries[static_cast<std::size_t>(
        store.add(prefix + "w2", {1, config.attention_hidden}))];
    glorot(w2.value, config.attention_hidden, 1);
    store.add(prefix + "b2", {1});
  }

  auto& cw = store.entries[static_cast<std::size_t>(
      store.add("classifier.weight", {config.class_count, c_out}))];
  glorot(cw.value, c_out, config.class_count);
  store.add("classifier.bias", {config.class_count});
  return store;
}

template <class Real>
std::vector<ad::Var> bind_parameters(ad::Tape<Real>& tape, const ParameterStore<Real>& params) {
  std::vector<ad::Var> leaves;
  leaves.reserve(params.entries.size());
  for (const auto& e : params.entries) leaves.push_back(tape.leaf(e.value, true));
  return leaves;
}

template <class Real>
void accumulate_gradients(ad::Tape<Real>& tape, const std::vector<ad::Var>& leaves,
                          ParameterStore<Real>& store, Real scale_factor) {
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto& g = tape.grad(leaves[i]);
    auto& dst = store.entries[i].grad;
    for (std::size_t k = 0; k < dst.data.size(); ++k)
      dst.data[k] += g.data[k] * scale_factor;
  }
}

namespace detail_model {
// One BiLSTM direction over a [T x J x C] tensor; weights are shared across
// joints, which act as the batch dimension of each cell step.
template <class Real>
std::vector<ad::Var> lstm_direction(ad::Tape<Real>& tape, ad::Var input, int t_count,
                                    int j_count, int hidden, ad::Var wx, ad::Var wh,
                                    ad::Var bias, bool reverse) {
  using namespace ad;
  Var h = tape.constant(Tensor<Real>::zeros({j_count, hidden}));
  Var c = tape.constant(Tensor<Real>::zeros({j_count, hidden}));
  std::vector<Var> outputs(static_cast<std::size_t>(t_count));
  for (int step = 0; step < t_count; ++step) {
    const int t = reverse ? t_count - 1 - step : step;
    Var x_t = time_slice(tape, input, t);
    Var pre = add(tape, linear(tape, x_t, wx, bias), linear(tape, h, wh));
    Var i_g = sigmoid(tape, slice_cols(tape, pre, 0, hidden));
    Var f_g = sigmoid(tape, slice_cols(tape, pre, hidden, 2 * hidden));
    Var g_g = tanh_op(tape, slice_cols(tape, pre, 2 * hidden, 3 * hidden));
    Var o_g = sigmoid(tape, slice_cols(tape, pre, 3 * hidden, 4 * hidden));
    c = add(tape, mul(tape, f_g, c), mul(tape, i_g, g_g));
    h = mul(tape, o_g, tanh_op(tape, c));
    outputs[static_cast<std::size_t>(t)] = h;
  }
  return outputs;
}

// MLP scores -> softmax over the trailing dimension.
template <class Real>
ad::Var attention_scores(ad::Tape<Real>& tape, ad::Var features, ad::Var w1, ad::Var b1,
                         ad::Var w2, ad::Var b2, std::vector<int> score_shape) {
  using namespace ad;
  Var hidden = tanh_op(tape, linear(tape, features, w1, b1));
  Var raw = linear(tape, hidden, w2, b2);  // trailing dim 1
  return reshape(tape, raw, std::move(score_shape));
}

}  // namespace detail_model

template <class Real>
ForwardHandles forward(ad::Tape<Real>& tape, const GraphConstants<Real>& graph,
                       const ModelConfig& config, const ParameterStore<Real>& params,
                       const Tensor<Real>& input, int label) {
  std::vector<ad::Var> leaves = bind_parameters(tape, params);
  return forward_bound(tape, graph, config, leaves, params, input, label);
}

template <class Real>
ForwardHandles forward_bound(ad::Tape<Real>& tape, const GraphConstants<Real>& graph,
                             const ModelConfig& config, const std::vector<ad::Var>& leaves,
                             const ParameterStore<Real>& params, const Tensor<Real>& input,
                             int label) {
  using namespace ad;
  config.validate();
  if (input.ndim() != 3 || input.dim(0) != kFeatureChannels)
    throw DataError("model input must be [9 x T x J]");
  const int j_count = input.dim(2);
  if (j_count != graph.joint_count) throw DataError("input joint count does not match graph");

  auto leaf_of = [&](const std::string& name) {
    return leaves[static_cast<std::size_t>(params.index.at(name))];
  };

  ForwardHandles h;
  h.input = tape.leaf(input, true);

  // [9 x T x J] -> [T x J x 9], then zero out masked channel groups so
  // ablations keep gradients of masked inputs at exactly zero.
  Var x = to_time_major(tape, h.input);
  if (!config.feature_mask.all()) {
    std::vector<Real> factors(kFeatureChannels, Real(0));
    for (int c = 0; c < 3; ++c) factors[static_cast<std::size_t>(c)] = config.feature_mask.coordinates;
    for (int c = 3; c < 6; ++c) factors[static_cast<std::size_t>(c)] = config.feature_mask.velocity;
    for (int c = 6; c < 9; ++c) factors[static_cast<std::size_t>(c)] = config.feature_mask.angle;
    x = channel_scale(tape, x, std::move(factors));
  }

  for (std::size_t l = 0; l < config.blocks.size(); ++l) {
    const auto& b = config.blocks[l];
    const std::string prefix = "block" + std::to_string(l + 1) + ".";
    Var mask = leaf_of(prefix + "edge_mask");

    Var mixed;
    for (int m = 0; m < 3; ++m) {
      Var s = masked_adjacency(tape, mask, graph.adjacency[static_cast<std::size_t>(m)],
                               graph.inv_sqrt_degree[static_cast<std::size_t>(m)]);
      Var term = linear(tape, frame_mix(tape, s, x), leaf_of(prefix + "w" + std::to_string(m)));
      mixed = m == 0 ? term : add(tape, mixed, term);
    }
    h.relu_pre.push_back(mixed);
    Var activated = relu(tape, mixed);
    Var conv = temporal_conv(tape, activated, leaf_of(prefix + "tconv.weight"),
                             leaf_of(prefix + "tconv.bias"), b.temporal_stride);
    if (b.in_channels == b.out_channels && b.temporal_stride == 1)
      conv = add(tape, conv, x);
    h.relu_pre.push_back(conv);
    x = relu(tape, conv);
  }

  const int t_out = tape.value(x).dim(0);
  h.t_out = t_out;

  Var z = x;
  if (config.use_bilstm) {
    auto fwd = detail_model::lstm_direction(tape, x, t_out, j_count, config.lstm_hidden,
                                            leaf_of("lstm.fwd.w_input"),
                                            leaf_of("lstm.fwd.w_recur"),
                                            leaf_of("lstm.fwd.bias"), false);
    auto bwd = detail_model::lstm_direction(tape, x, t_out, j_count, config.lstm_hidden,
                                            leaf_of("lstm.bwd.w_input"),
                                            leaf_of("lstm.bwd.w_recur"),
                                            leaf_of("lstm.bwd.bias"), true);
    z = concat_channels(tape, stack_time(tape, fwd), stack_time(tape, bwd));
  }

  if (config.use_attention) {
    Var alpha_scores = detail_model::attention_scores(
        tape, z, leaf_of("attn.spatial.w1"), leaf_of("attn.spatial.b1"),
        leaf_of("attn.spatial.w2"), leaf_of("attn.spatial.b2"), {t_out, j_count});
    h.alpha = softmax(tape, alpha_scores);
    Var v = attention_pool_joints(tape, h.alpha, z);
    Var beta_scores = detail_model::attention_scores(
        tape, v, leaf_of("attn.temporal.w1"), leaf_of("attn.temporal.b1"),
        leaf_of("attn.temporal.w2"), leaf_of("attn.temporal.b2"), {t_out});
    h.beta = softmax(tape, beta_scores);
    h.z_out = attention_pool_time(tape, h.beta, v);
  } else {
    h.z_out = global_mean_pool(tape, z);
  }

  h.logits = linear(tape, h.z_out, leaf_of("classifier.weight"), leaf_of("classifier.bias"));
  h.probs = softmax(tape, h.logits);

  if (label >= 0) {
    if (label >= config.class_count) throw DataError("label out of range");
    std::vector<Real> one_hot(static_cast<std::size_t>(config.class_count), Real(0));
    one_hot[static_cast<std::size_t>(label)] = Real(1);
    h.loss = cross_entropy(tape, h.probs, one_hot);
  }
  return h;
}

template <class Real>
Activations extract_activations(const ad::Tape<Real>& tape, const ForwardHandles& h) {
  Activations a;
  a.probabilities = tape.value(h.probs).template cast<double>();
  a.z_out = tape.value(h.z_out).template cast<double>();
  if (h.alpha.valid()) a.alpha = tape.value(h.alpha).template cast<double>();
  if (h.beta.valid()) a.beta = tape.value(h.beta).template cast<double>();
  return a;
}

inline double cross_entropy_value(const std::vector<double>& probs,
                                  const std::vector<double>& one_hot) {
  if (probs.size() != one_hot.size()) throw DataError("cross_entropy: class count mismatch");
  int ones = 0;
  double loss = 0.0;
  for (std::size_t k = 0; k < one_hot.size(); ++k) {
    if (one_hot[k] == 1.0) {
      ++ones;
      loss -= std::log(std::max(probs[k], 1e-12));
    } else if (one_hot[k] != 0.0) {
      throw DataError("cross_entropy: target is not one-hot");
    }
  }
  if (ones != 1) throw DataError("cross_entropy: target is not one-hot");
  return loss;
}

}  // namespace fimnet
