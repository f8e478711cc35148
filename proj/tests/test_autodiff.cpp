#include <doctest.h>

#include <cmath>

#include "fimnet/autodiff.hpp"
#include "fimnet/gradcheck.hpp"
#include "fimnet/model.hpp"
#include "fimnet/rng.hpp"
#include "test_helpers.hpp"

using namespace fimnet;
using namespace fimnet::ad;
using testutil::fd_check_input;
using testutil::random_tensor;

TEST_CASE("sum of leaf gives all-ones gradient") {
  Tape<double> tape;
  Tensor<double> v({4});
  v.data = {1.0, -2.0, 3.0, 0.5};
  Var x = tape.leaf(v, true);
  Var loss = sum_all(tape, x);
  tape.backward(loss);
  for (double g : tape.grad(x).data) CHECK(g == 1.0);
}

TEST_CASE("d(x^2)/dx at 3 is 6") {
  Tape<double> tape;
  Tensor<double> v({1});
  v.data = {3.0};
  Var x = tape.leaf(v, true);
  Var loss = mul(tape, x, x);
  tape.backward(loss);
  CHECK(tape.grad(x).data[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("backward requires a recorded forward pass") {
  Tape<double> tape;
  CHECK_THROWS_AS(tape.backward(Var{}), NumericError);
  Var c = tape.constant(Tensor<double>({1}));
  CHECK_THROWS_AS(tape.backward(c), NumericError);  // no differentiable input
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape<double> tape;
  Var x = tape.leaf(Tensor<double>({3}, 1.0), true);
  CHECK_THROWS_AS(tape.backward(x), NumericError);
}

TEST_CASE("elementwise and activation gradients match finite differences") {
  Rng rng(7);
  Tensor<double> input = random_tensor({3, 4}, rng);

  auto chain = [](Tape<double>& tp, Var x, auto&& op) {
    return sum_all(tp, tanh_op(tp, op(tp, x)));
  };
  CHECK(fd_check_input(input, [&](Tape<double>& tp, Var x) {
          return chain(tp, x, [](Tape<double>& t, Var v) { return sigmoid(t, v); });
        }) < 1e-7);
  CHECK(fd_check_input(input, [&](Tape<double>& tp, Var x) {
          return chain(tp, x, [](Tape<double>& t, Var v) { return tanh_op(t, v); });
        }) < 1e-7);
  CHECK(fd_check_input(input, [&](Tape<double>& tp, Var x) {
          Var y = mul(tp, x, x);
          return sum_all(tp, add(tp, y, scale(tp, x, 0.5)));
        }) < 1e-7);
}

TEST_CASE("linear gradients match finite differences") {
  Rng rng(11);
  Tensor<double> x = random_tensor({5, 3}, rng);
  Tensor<double> w = random_tensor({4, 3}, rng);
  Tensor<double> b = random_tensor({4}, rng);

  SUBCASE("with respect to input") {
    CHECK(fd_check_input(x, [&](Tape<double>& tp, Var leaf) {
            Var wv = tp.leaf(w, true);
            Var bv = tp.leaf(b, true);
            return sum_all(tp, tanh_op(tp, linear(tp, leaf, wv, bv)));
          }) < 1e-7);
  }
  SUBCASE("with respect to weight") {
    CHECK(fd_check_input(w, [&](Tape<double>& tp, Var leaf) {
            Var xv = tp.leaf(x, true);
            Var bv = tp.leaf(b, true);
            return sum_all(tp, tanh_op(tp, linear(tp, xv, leaf, bv)));
          }) < 1e-7);
  }
  SUBCASE("with respect to bias") {
    CHECK(fd_check_input(b, [&](Tape<double>& tp, Var leaf) {
            Var xv = tp.leaf(x, true);
            Var wv = tp.leaf(w, true);
            return sum_all(tp, tanh_op(tp, linear(tp, xv, wv, leaf)));
          }) < 1e-7);
  }
}

TEST_CASE("temporal convolution matches a brute-force sliding dot product") {
  Rng rng(13);
  const int t_in = 8, j_count = 2, c_in = 3, c_out = 2, kernel = 3;
  Tensor<double> f = random_tensor({t_in, j_count, c_in}, rng);
  Tensor<double> w = random_tensor({kernel, c_out, c_in}, rng);
  Tensor<double> b = random_tensor({c_out}, rng);

  for (int stride : {1, 2}) {
    Tape<double> tape;
    Var fv = tape.leaf(f, false);
    Var wv = tape.leaf(w, false);
    Var bv = tape.leaf(b, false);
    Var out = temporal_conv(tape, fv, wv, bv, stride);
    const auto& ov = tape.value(out);

    const int pad = (kernel - 1) / 2;
    const int t_out = (t_in + stride - 1) / stride;
    REQUIRE(ov.dim(0) == t_out);
    for (int to = 0; to < t_out; ++to)
      for (int j = 0; j < j_count; ++j)
        for (int co = 0; co < c_out; ++co) {
          double expect = b.at(co);
          for (int k = 0; k < kernel; ++k) {
            const int ti = to * stride + k - pad;
            if (ti < 0 || ti >= t_in) continue;
            for (int ci = 0; ci < c_in; ++ci)
              expect += f.at(ti, j, ci) * w.at(k, co, ci);
          }
          CHECK(ov.at(to, j, co) == doctest::Approx(expect).epsilon(1e-12));
        }
  }
}

TEST_CASE("temporal convolution gradients match finite differences") {
  Rng rng(17);
  const int t_in = 7, j_count = 3, c_in = 2, c_out = 2, kernel = 3;
  Tensor<double> f = random_tensor({t_in, j_count, c_in}, rng);
  Tensor<double> w = random_tensor({kernel, c_out, c_in}, rng);
  Tensor<double> b = random_tensor({c_out}, rng);

  for (int stride : {1, 2}) {
    CHECK(fd_check_input(f, [&](Tape<double>& tp, Var leaf) {
            Var wv = tp.leaf(w, true);
            Var bv = tp.leaf(b, true);
            return sum_all(tp, tanh_op(tp, temporal_conv(tp, leaf, wv, bv, stride)));
          }) < 1e-6);
    CHECK(fd_check_input(w, [&](Tape<double>& tp, Var leaf) {
            Var fv = tp.leaf(f, true);
            Var bv = tp.leaf(b, true);
            return sum_all(tp, tanh_op(tp, temporal_conv(tp, fv, leaf, bv, stride)));
          }) < 1e-6);
    CHECK(fd_check_input(b, [&](Tape<double>& tp, Var leaf) {
            Var fv = tp.leaf(f, true);
            Var wv = tp.leaf(w, true);
            return sum_all(tp, tanh_op(tp, temporal_conv(tp, fv, wv, leaf, stride)));
          }) < 1e-6);
  }
}

TEST_CASE("frame mix and masked adjacency gradients match finite differences") {
  Rng rng(19);
  const int j_count = 4;
  Tensor<double> s = random_tensor({j_count, j_count}, rng);
  Tensor<double> f = random_tensor({3, j_count, 2}, rng);
  Tensor<double> mask = random_tensor({j_count, j_count}, rng, 0.5, 1.5);
  Tensor<double> adjacency = random_tensor({j_count, j_count}, rng, 0.0, 1.0);
  std::vector<double> inv_deg;
  for (int i = 0; i < j_count; ++i) inv_deg.push_back(rng.uniform(0.5, 1.5));

  CHECK(fd_check_input(f, [&](Tape<double>& tp, Var leaf) {
          Var sv = tp.leaf(s, true);
          return sum_all(tp, tanh_op(tp, frame_mix(tp, sv, leaf)));
        }) < 1e-7);
  CHECK(fd_check_input(s, [&](Tape<double>& tp, Var leaf) {
          Var fv = tp.leaf(f, true);
          return sum_all(tp, tanh_op(tp, frame_mix(tp, leaf, fv)));
        }) < 1e-7);
  CHECK(fd_check_input(mask, [&](Tape<double>& tp, Var leaf) {
          Var fv = tp.leaf(f, true);
          Var sv = masked_adjacency(tp, leaf, adjacency, inv_deg);
          return sum_all(tp, tanh_op(tp, frame_mix(tp, sv, fv)));
        }) < 1e-7);
}

TEST_CASE("softmax/attention-pool gradients match finite differences") {
  Rng rng(23);
  Tensor<double> scores = random_tensor({4, 5}, rng);
  Tensor<double> z = random_tensor({4, 5, 3}, rng);
  Tensor<double> beta_scores = random_tensor({4}, rng);
  Tensor<double> v = random_tensor({4, 3}, rng);

  CHECK(fd_check_input(scores, [&](Tape<double>& tp, Var leaf) {
          Var zv = tp.leaf(z, true);
          Var a = softmax(tp, leaf);
          return sum_all(tp, tanh_op(tp, attention_pool_joints(tp, a, zv)));
        }) < 1e-6);
  CHECK(fd_check_input(z, [&](Tape<double>& tp, Var leaf) {
          Var sv = tp.leaf(scores, true);
          Var a = softmax(tp, sv);
          return sum_all(tp, tanh_op(tp, attention_pool_joints(tp, a, leaf)));
        }) < 1e-6);
  CHECK(fd_check_input(beta_scores, [&](Tape<double>& tp, Var leaf) {
          Var vv = tp.leaf(v, true);
          Var beta = softmax(tp, leaf);
          return sum_all(tp, tanh_op(tp, attention_pool_time(tp, beta, vv)));
        }) < 1e-6);
  CHECK(fd_check_input(v, [&](Tape<double>& tp, Var leaf) {
          Var bv = tp.leaf(beta_scores, true);
          Var beta = softmax(tp, bv);
          return sum_all(tp, tanh_op(tp, attention_pool_time(tp, beta, leaf)));
        }) < 1e-6);
}

TEST_CASE("shape plumbing gradients match finite differences") {
  Rng rng(29);
  Tensor<double> x = random_tensor({3, 4, 2}, rng);
  Tensor<double> m = random_tensor({4, 6}, rng);

  CHECK(fd_check_input(x, [&](Tape<double>& tp, Var leaf) {
          Var y = to_time_major(tp, leaf);
          Var t0 = time_slice(tp, y, 1);
          return sum_all(tp, tanh_op(tp, t0));
        }) < 1e-7);
  CHECK(fd_check_input(m, [&](Tape<double>& tp, Var leaf) {
          Var a = slice_cols(tp, leaf, 1, 4);
          Var b = slice_cols(tp, leaf, 3, 6);
          return sum_all(tp, tanh_op(tp, mul(tp, a, b)));
        }) < 1e-7);
  CHECK(fd_check_input(x, [&](Tape<double>& tp, Var leaf) {
          Var a = time_slice(tp, leaf, 0);
          Var b = time_slice(tp, leaf, 2);
          Var stacked = stack_time(tp, {a, b, a});
          return sum_all(tp, tanh_op(tp, stacked));
        }) < 1e-7);
  CHECK(fd_check_input(x, [&](Tape<double>& tp, Var leaf) {
          Var c = concat_channels(tp, leaf, leaf);
          return sum_all(tp, tanh_op(tp, c));
        }) < 1e-7);
  CHECK(fd_check_input(x, [&](Tape<double>& tp, Var leaf) {
          return sum_all(tp, tanh_op(tp, global_mean_pool(tp, leaf)));
        }) < 1e-7);
  CHECK(fd_check_input(x, [&](Tape<double>& tp, Var leaf) {
          std::vector<double> factors = {1.0, 0.0};
          return sum_all(tp, tanh_op(tp, channel_scale(tp, leaf, factors)));
        }) < 1e-7);
}

TEST_CASE("relu gradient matches finite differences away from kinks") {
  Rng rng(31);
  Tensor<double> x = random_tensor({4, 4}, rng);
  for (double& v : x.data)
    if (std::abs(v) < 1e-3) v += 0.01;  // keep clear of the kink
  CHECK(fd_check_input(x, [&](Tape<double>& tp, Var leaf) {
          return sum_all(tp, relu(tp, leaf));
        }) < 1e-7);
}

TEST_CASE("cross entropy gradient and softmax composition") {
  Rng rng(37);
  Tensor<double> logits = random_tensor({2}, rng);
  std::vector<double> one_hot = {0.0, 1.0};
  CHECK(fd_check_input(logits, [&](Tape<double>& tp, Var leaf) {
          Var probs = softmax(tp, leaf);
          return cross_entropy(tp, probs, one_hot);
        }) < 1e-7);
}

TEST_CASE("cross entropy rejects non-one-hot targets") {
  Tape<double> tape;
  Tensor<double> p({2});
  p.data = {0.5, 0.5};
  Var probs = tape.leaf(p, true);
  CHECK_THROWS_AS(cross_entropy(tape, probs, std::vector<double>{0.5, 0.5}), DataError);
  CHECK_THROWS_AS(cross_entropy(tape, probs, std::vector<double>{1.0, 1.0}), DataError);
}

TEST_CASE("two identical forward states give identical gradients") {
  Rng rng(41);
  Tensor<double> x = random_tensor({3, 3}, rng);
  Tensor<double> w = random_tensor({2, 3}, rng);

  auto run = [&]() {
    Tape<double> tape;
    Var xv = tape.leaf(x, true);
    Var wv = tape.leaf(w, true);
    Var loss = sum_all(tape, tanh_op(tape, linear(tape, xv, wv)));
    tape.backward(loss);
    return std::make_pair(tape.grad(xv).data, tape.grad(wv).data);
  };
  auto [gx1, gw1] = run();
  auto [gx2, gw2] = run();
  CHECK(gx1 == gx2);
  CHECK(gw1 == gw2);
}

// ---------------------------------------------------------------------------
// model-level gradient properties
// ---------------------------------------------------------------------------

namespace {

struct GradFixture {
  SkeletonGraph graph = testutil::chain5();
  Partition partition = label_partitions(graph);
  GraphConstants<double> constants = GraphConstants<double>::from(partition);
  ModelConfig config = ModelConfig::tiny();

  ParameterStore<double> params;
  Tensor<double> input;

  explicit GradFixture(std::uint64_t seed = 0)
      : params(generic_check_parameters(config, 5, seed)),
        input(generic_check_input(constants, config, params, 12, seed)) {}
};

}  // namespace

TEST_CASE("full tiny model passes the finite-difference check") {
  GradFixture fx;
  GradReport report = finite_difference_check(fx.constants, fx.config, fx.params, fx.input,
                                              1, 1e-4, 1e-3, 20, 0);
  for (const auto& g : report.groups) {
    INFO(g.name, " rel err ", g.max_rel_error);
    CHECK(g.pass);
  }
  CHECK(report.pass);
}

TEST_CASE("a corrupted gradient is detected") {
  // doubling the analytic gradient must blow the relative error far past the
  // tolerance on any coordinate with meaningful gradient
  GradFixture fx;
  ParameterStore<double> work = fx.params;
  work.zero_grad();
  {
    ad::Tape<double> tape;
    auto leaves = bind_parameters(tape, work);
    auto handles = forward_bound(tape, fx.constants, fx.config, leaves, work, fx.input, 1);
    tape.backward(handles.loss);
    accumulate_gradients(tape, leaves, work, 1.0);
  }
  auto& entry = work.at("classifier.weight");
  double corrupted = 2.0 * entry.grad.data[0];
  const double eps = 1e-4;

  const double original = entry.value.data[0];
  auto loss_at = [&]() {
    ad::Tape<double> tape;
    auto h = forward(tape, fx.constants, fx.config, work, fx.input, 1);
    return tape.value(h.loss).data[0];
  };
  entry.value.data[0] = original + eps;
  const double up = loss_at();
  entry.value.data[0] = original - eps;
  const double down = loss_at();
  entry.value.data[0] = original;

  const double numeric = (up - down) / (2.0 * eps);
  const double rel = std::abs(numeric - corrupted) /
                     std::max({std::abs(numeric), std::abs(corrupted), 1e-8});
  CHECK(rel > 1e-3);
}

TEST_CASE("halving epsilon does not inflate the errors") {
  GradFixture fx;
  GradReport full = finite_difference_check(fx.constants, fx.config, fx.params, fx.input, 1,
                                            1e-4, 1e-3, 8, 0);
  GradReport half = finite_difference_check(fx.constants, fx.config, fx.params, fx.input, 1,
                                            5e-5, 1e-3, 8, 0);
  double worst_full = 0.0, worst_half = 0.0;
  for (const auto& g : full.groups) worst_full = std::max(worst_full, g.max_rel_error);
  for (const auto& g : half.groups) worst_half = std::max(worst_half, g.max_rel_error);
  CHECK(worst_half <= 10.0 * std::max(worst_full, 1e-6));
}

TEST_CASE("loss gradient with respect to logits equals probs minus one-hot") {
  GradFixture fx;
  ad::Tape<double> tape;
  auto handles = forward(tape, fx.constants, fx.config, fx.params, fx.input, 1);
  tape.backward(handles.loss);

  const auto& probs = tape.value(handles.probs);
  const auto& logit_grad = tape.grad(handles.logits);
  const std::vector<double> one_hot = {0.0, 1.0};
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(logit_grad.data[k] == doctest::Approx(probs.data[k] - one_hot[k]).epsilon(1e-9));
}

TEST_CASE("parameters unused under ablation flags get exactly zero gradients") {
  GradFixture fx;
  ModelConfig config = fx.config;
  config.use_attention = false;
  config.use_bilstm = false;

  ParameterStore<double> work = fx.params;
  // classifier input width differs without the BiLSTM; rebuild a matching store
  work = generic_check_parameters(config, 5, 3);
  work.zero_grad();
  ad::Tape<double> tape;
  auto leaves = bind_parameters(tape, work);
  auto handles = forward_bound(tape, fx.constants, config, leaves, work, fx.input, 1);
  tape.backward(handles.loss);
  accumulate_gradients(tape, leaves, work, 1.0);

  for (const auto& e : work.entries) {
    const bool unused = e.name.rfind("lstm.", 0) == 0 || e.name.rfind("attn.", 0) == 0;
    if (!unused) continue;
    for (double g : e.grad.data) CHECK(g == 0.0);
  }
}

TEST_CASE("masked feature channels receive exactly zero input gradients") {
  GradFixture fx;
  ModelConfig config = fx.config;
  config.feature_mask = FeatureMask::coords_only();
  ParameterStore<double> params = generic_check_parameters(config, 5, 5);

  ad::Tape<double> tape;
  auto handles = forward(tape, fx.constants, config, params, fx.input, 0);
  tape.backward(handles.loss);
  const auto& input_grad = tape.grad(handles.input);
  for (int c = 3; c < 9; ++c)
    for (int t = 0; t < 12; ++t)
      for (int j = 0; j < 5; ++j) CHECK(input_grad.at(c, t, j) == 0.0);

  bool any_nonzero = false;
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < 12; ++t)
      for (int j = 0; j < 5; ++j) any_nonzero = any_nonzero || input_grad.at(c, t, j) != 0.0;
  CHECK(any_nonzero);
}
