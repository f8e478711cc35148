#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fimnet/autodiff.hpp"
#include "fimnet/partition.hpp"
#include "fimnet/rng.hpp"
#include "fimnet/skeleton.hpp"
#include "fimnet/tensor.hpp"

namespace testutil {

// 5-joint chain with the root in the middle; center distances grow strictly
// outward so the partition labels are unambiguous.
inline fimnet::SkeletonGraph chain5() {
  std::vector<fimnet::Vec3> pose = {
      {0, 0, 0}, {0, 0.3, 0}, {0, 0.65, 0}, {0, 1.05, 0}, {0, 1.5, 0}};
  return fimnet::build_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, 2, pose);
}

inline fimnet::Tensor<double> random_tensor(std::vector<int> shape, fimnet::Rng& rng,
                                            double lo = -1.0, double hi = 1.0) {
  fimnet::Tensor<double> t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Central-difference check of a scalar-valued tape computation with respect
// to one differentiable leaf. Returns the max relative error over all
// coordinates of that leaf.
inline double fd_check_input(
    const fimnet::Tensor<double>& input,
    const std::function<fimnet::ad::Var(fimnet::ad::Tape<double>&, fimnet::ad::Var)>& build,
    double eps = 1e-6) {
  using fimnet::ad::Tape;
  using fimnet::ad::Var;

  Tape<double> tape;
  Var leaf = tape.leaf(input, true);
  Var loss = build(tape, leaf);
  tape.backward(loss);
  const fimnet::Tensor<double> analytic = tape.grad(leaf);

  auto eval = [&](const fimnet::Tensor<double>& x) {
    Tape<double> t2;
    Var l2 = t2.leaf(x, true);
    Var out = build(t2, l2);
    return t2.value(out).data[0];
  };

  double worst = 0.0;
  fimnet::Tensor<double> probe = input;
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const double original = probe.data[i];
    probe.data[i] = original + eps;
    const double up = eval(probe);
    probe.data[i] = original - eps;
    const double down = eval(probe);
    probe.data[i] = original;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(analytic.data[i]), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic.data[i]) / denom);
  }
  return worst;
}

}  // namespace testutil
