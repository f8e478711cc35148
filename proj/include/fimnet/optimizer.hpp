#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fimnet/errors.hpp"
#include "fimnet/model.hpp"

namespace fimnet {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OneCycleConfig {
  double max_lr = 0.01;
  double warmup_fraction = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
};

// Cosine ramp from max_lr / div_factor up to max_lr over the warmup steps,
// then cosine anneal down to max_lr / final_div_factor at the last step.
inline double one_cycle_lr(std::int64_t step, std::int64_t total_steps,
                           const OneCycleConfig& cfg) {
  if (total_steps < 1) throw ConfigError("schedule needs at least one step");
  if (step < 0 || step >= total_steps) throw ConfigError("schedule step out of range");
  if (!(cfg.max_lr > 0.0)) throw ConfigError("max_lr must be positive");
  if (!(cfg.warmup_fraction > 0.0 && cfg.warmup_fraction < 1.0))
    throw ConfigError("warmup fraction must be in (0,1)");

  const double initial = cfg.max_lr / cfg.div_factor;
  const double final_lr = cfg.max_lr / cfg.final_div_factor;
  if (total_steps == 1) return initial;

  const auto warmup_steps = static_cast<std::int64_t>(
      std::floor(cfg.warmup_fraction * static_cast<double>(total_steps)));
  const std::int64_t peak = std::max<std::int64_t>(warmup_steps, 1);

  if (step <= peak) {
    const double progress = static_cast<double>(step) / static_cast<double>(peak);
    return initial + (cfg.max_lr - initial) * 0.5 * (1.0 - std::cos(M_PI * progress));
  }
  const double progress = static_cast<double>(step - peak) /
                          static_cast<double>(total_steps - 1 - peak);
  return final_lr + (cfg.max_lr - final_lr) * 0.5 * (1.0 + std::cos(M_PI * progress));
}

// First and second moment estimates, one pair per parameter group.
template <class Real>
struct AdamState {
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;
  std::int64_t step = 0;

  static AdamState init(const ParameterStore<Real>& params) {
    AdamState s;
    s.m.reserve(params.entries.size());
    s.v.reserve(params.entries.size());
    for (const auto& e : params.entries) {
      s.m.push_back(Tensor<Real>::zeros(e.value.shape));
      s.v.push_back(Tensor<Real>::zeros(e.value.shape));
    }
    return s;
  }
};

// One bias-corrected Adam update from the gradients stored in `params`.
// Rejects non-finite gradients so a diverged run stops at the bad step.
template <class Real>
void adam_step(ParameterStore<Real>& params, AdamState<Real>& state, double lr,
               const AdamConfig& cfg = {}) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t gi = 0; gi < params.entries.size(); ++gi) {
    auto& value = params.entries[gi].value;
    const auto& grad = params.entries[gi].grad;
    auto& m = state.m[gi];
    auto& v = state.v[gi];
    for (std::size_t i = 0; i < value.data.size(); ++i) {
      const double g = static_cast<double>(grad.data[i]);
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient in group " + params.entries[gi].name);
      const double m_new = cfg.beta1 * static_cast<double>(m.data[i]) + (1.0 - cfg.beta1) * g;
      const double v_new = cfg.beta2 * static_cast<double>(v.data[i]) + (1.0 - cfg.beta2) * g * g;
      m.data[i] = static_cast<Real>(m_new);
      v.data[i] = static_cast<Real>(v_new);
      const double m_hat = m_new / bc1;
      const double v_hat = v_new / bc2;
      value.data[i] = static_cast<Real>(static_cast<double>(value.data[i]) -
                                        lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace fimnet
