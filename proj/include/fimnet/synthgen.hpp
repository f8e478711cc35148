#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fimnet/sequence.hpp"
#include "fimnet/skeleton.hpp"

namespace fimnet {

// Deterministic sinusoidal motion generator with a known class structure:
// class 1 moves the signal joints with full amplitude and frequency, class 0
// with amplitude scaled by (1 - amplitude_gap) and frequency scaled by
// (1 - 0.8 * amplitude_gap), so at the default gap of 0.5 the slow class runs
// at 0.6x frequency and the classes coincide exactly when the gap is 0.
// Every other joint gets small class-independent baseline motion.
struct SynthConfig {
  int n_sequences = 250;
  double class_balance = 0.5;  // fraction of class 1
  double amplitude_gap = 0.5;
  std::vector<JointId> signal_joints = {JointId::WristRight, JointId::ElbowRight,
                                        JointId::KneeRight};
  double noise_std = 0.01;    // meters
  double missing_rate = 0.0;  // whole-frame drop probability
  double outlier_rate = 0.0;  // per (frame, joint) spike probability
  std::uint64_t seed = 0;

  // generation constants
  int frames = 170;
  double frame_rate = 30.0;
  double signal_amplitude = 0.15;  // meters, split across axes
  double signal_frequency = 1.0;   // Hz
  double baseline_amplitude_min = 0.005;
  double baseline_amplitude_max = 0.02;
  double baseline_frequency_min = 0.3;
  double baseline_frequency_max = 1.2;

  // manifest fields
  std::string fim_item = "TubShower";
  std::string action = "Squat";
  int independent_score = 7;
  int assisted_score = 3;

  void validate() const;

  double class0_frequency_factor() const { return 1.0 - 0.8 * amplitude_gap; }
};

struct GeneratedSequence {
  RawSequence sequence;
  int label = 0;
  std::string id;
};

// Per-sequence sub-seeds are derived from (seed, index), so generation is
// order-independent and byte-stable.
GeneratedSequence generate_sequence(const SynthConfig& config, int index);
std::vector<GeneratedSequence> generate_sequences(const SynthConfig& config);

// Writes seq_NNNN.jsonl files plus manifest.csv into out_dir; returns the
// manifest path.
std::string write_dataset(const SynthConfig& config, const std::string& out_dir);

// Mean speed of the signal joints over observed consecutive frame pairs.
double signal_speed_statistic(const RawSequence& seq, const SynthConfig& config);

// Threshold rule at the midpoint of the two class means implied by the
// config; exact when noise and corruption are disabled.
int oracle_label(const RawSequence& seq, const SynthConfig& config);
double oracle_threshold(const SynthConfig& config);

}  // namespace fimnet
