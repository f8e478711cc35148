#pragma once

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>
#include <vector>

#include "fimnet/model.hpp"
#include "fimnet/rng.hpp"

namespace fimnet {

struct GroupCheck {
  std::string name;
  double max_rel_error = 0.0;
  int coordinates_checked = 0;
  int coordinates_skipped = 0;  // straddled a ReLU kink; see below
  bool pass = false;
};

struct GradReport {
  std::vector<GroupCheck> groups;
  double epsilon = 1e-4;
  double tolerance = 1e-3;
  bool pass = false;

  std::string to_json() const;
};

namespace detail_gradcheck {

template <class Real>
double loss_at(const GraphConstants<Real>& graph, const ModelConfig& config,
               const ParameterStore<Real>& params, const Tensor<Real>& input, int label) {
  ad::Tape<Real> tape;
  auto handles = forward(tape, graph, config, params, input, label);
  return static_cast<double>(tape.value(handles.loss).data[0]);
}

}  // namespace detail_gradcheck

// Finite differences only estimate the gradient where the loss is smooth
// around the evaluation point, so the point must be generic: no ReLU
// pre-activation may sit on or within the probe window of its kink. The two
// helpers below construct such points.

// Training starts biases at zero, but that puts ReLU kinks exactly at the
// evaluation point: a dead input stripe makes a convolution output equal its
// bias exactly, and a zero bias then parks the pre-activation on the kink,
// where central differences measure half the one-sided slope at every
// epsilon. Checking at a generic point (small nonzero biases) verifies the
// same chain rule without that artifact.
inline ParameterStore<double> generic_check_parameters(const ModelConfig& config,
                                                       int joint_count, std::uint64_t seed) {
  ParameterStore<double> params = init_parameters<double>(config, joint_count, seed);
  Rng rng(derive_seed(seed, 0x62696173ULL));
  for (auto& entry : params.entries) {
    if (entry.name.find("bias") == std::string::npos &&
        entry.name.find(".b") == std::string::npos)
      continue;
    for (double& v : entry.value.data) v += rng.uniform(-0.2, 0.2);
  }
  return params;
}

// Draws random inputs until every ReLU pre-activation clears `margin`, so no
// kink lies inside the difference window of any probe scale. Returns the
// best draw if none clears within max_tries (margin is ~25x the smallest
// probe scale, so a clearing draw is found almost immediately in practice).
inline Tensor<double> generic_check_input(const GraphConstants<double>& graph,
                                          const ModelConfig& config,
                                          const ParameterStore<double>& params,
                                          int frames, std::uint64_t seed,
                                          double margin = 1e-4, int max_tries = 32) {
  Tensor<double> best;
  double best_clearance = -1.0;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Rng rng(derive_seed(seed, 0x696e7075ULL + static_cast<std::uint64_t>(attempt)));
    Tensor<double> input({kFeatureChannels, frames, graph.joint_count});
    for (double& v : input.data) v = rng.uniform(-1.0, 1.0);

    ad::Tape<double> tape;
    auto handles = forward(tape, graph, config, params, input, -1);
    double clearance = std::numeric_limits<double>::infinity();
    for (ad::Var pre : handles.relu_pre)
      for (double v : tape.value(pre).data)
        clearance = std::min(clearance, std::abs(v));

    if (clearance > best_clearance) {
      best_clearance = clearance;
      best = std::move(input);
    }
    if (best_clearance > margin) break;
  }
  return best;
}

// Central-difference verification of the tape gradients, in 64-bit
// arithmetic. Samples up to `per_group` coordinates from every parameter
// group; relative errors use a 1e-8 denominator floor.
//
// The loss is piecewise smooth because of ReLU. When a coordinate's +-epsilon
// window straddles a kink, the central difference measures a mixture of the
// two one-sided slopes and no longer estimates the gradient, so such
// coordinates are detected through the discrete second difference
// |L+ + L- - 2 L0| and replaced by a fresh sample.
inline GradReport finite_difference_check(const GraphConstants<double>& graph,
                                          const ModelConfig& config,
                                          const ParameterStore<double>& params,
                                          const Tensor<double>& input, int label,
                                          double epsilon = 1e-4, double tolerance = 1e-3,
                                          int per_group = 20, std::uint64_t seed = 0) {
  if (!(epsilon > 0.0)) throw ConfigError("gradcheck epsilon must be positive");

  // Analytic gradients once.
  ParameterStore<double> work = params;
  work.zero_grad();
  {
    ad::Tape<double> tape;
    auto leaves = bind_parameters(tape, work);
    auto handles = forward_bound(tape, graph, config, leaves, work, input, label);
    tape.backward(handles.loss);
    accumulate_gradients(tape, leaves, work, 1.0);
  }
  const double base_loss = detail_gradcheck::loss_at(graph, config, work, input, label);

  GradReport report;
  report.epsilon = epsilon;
  report.tolerance = tolerance;
  report.pass = true;
  Rng rng(derive_seed(seed, 0x67636b00ULL));

  for (std::size_t gi = 0; gi < work.entries.size(); ++gi) {
    auto& entry = work.entries[gi];
    GroupCheck check;
    check.name = entry.name;

    // Candidate order: random permutation, walked until enough coordinates
    // pass the smoothness screen.
    const auto n = static_cast<std::size_t>(entry.value.numel());
    std::vector<std::size_t> order = rng.sample_without_replacement(n, n);

    double fallback_rel = 0.0;  // least-curved candidate, used if all straddle
    bool have_fallback = false;
    double fallback_curvature = 0.0;

    for (std::size_t ci : order) {
      if (check.coordinates_checked >= per_group) break;
      const double original = entry.value.data[ci];
      const double analytic = entry.grad.data[ci];

      // A genuine gradient defect disagrees at every scale; kink pollution
      // dies off once a scale fits inside the smooth neighborhood, so the
      // cleanest estimate stands.
      double rel = std::numeric_limits<double>::infinity();
      double curvature_ratio = 0.0;
      for (double h : {epsilon, epsilon / 5.0, epsilon / 25.0}) {
        entry.value.data[ci] = original + h;
        const double up = detail_gradcheck::loss_at(graph, config, work, input, label);
        entry.value.data[ci] = original - h;
        const double down = detail_gradcheck::loss_at(graph, config, work, input, label);
        entry.value.data[ci] = original;

        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        rel = std::min(rel, std::abs(numeric - analytic) / denom);

        const double curvature = std::abs(up + down - 2.0 * base_loss);
        const double slope_scale =
            std::max({std::abs(up - base_loss), std::abs(down - base_loss), 1e-12});
        curvature_ratio = std::max(curvature_ratio, curvature / slope_scale);
      }

      if (curvature_ratio > 0.25) {
        check.coordinates_skipped += 1;
        if (!have_fallback || curvature_ratio < fallback_curvature) {
          have_fallback = true;
          fallback_curvature = curvature_ratio;
          fallback_rel = rel;
        }
        continue;
      }
      check.max_rel_error = std::max(check.max_rel_error, rel);
      check.coordinates_checked += 1;
    }
    if (check.coordinates_checked == 0 && have_fallback) {
      check.max_rel_error = fallback_rel;
      check.coordinates_checked = 1;
    }
    check.pass = check.max_rel_error <= tolerance;
    report.pass = report.pass && check.pass;
    report.groups.push_back(std::move(check));
  }
  return report;
}

}  // namespace fimnet
