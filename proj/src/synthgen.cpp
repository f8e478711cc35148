#include "fimnet/synthgen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fimnet/errors.hpp"
#include "fimnet/ingest.hpp"
#include "fimnet/rng.hpp"

namespace fimnet {

void SynthConfig::validate() const {
  if (n_sequences < 1) throw ConfigError("n_sequences must be >= 1");
  if (!(class_balance > 0.0 && class_balance < 1.0))
    throw ConfigError("class_balance must be in (0,1)");
  if (amplitude_gap < 0.0 || amplitude_gap > 1.0)
    throw ConfigError("amplitude_gap must be in [0,1]");
  if (missing_rate < 0.0 || missing_rate >= 1.0)
    throw ConfigError("missing_rate must be in [0,1)");
  if (outlier_rate < 0.0 || outlier_rate >= 1.0)
    throw ConfigError("outlier_rate must be in [0,1)");
  if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
  if (signal_joints.empty()) throw ConfigError("need at least one signal joint");
  if (frames < 2) throw ConfigError("need at least 2 frames");
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be positive");
}

namespace {

struct AxisTrajectory {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

bool is_signal_joint(const SynthConfig& config, int joint) {
  for (JointId id : config.signal_joints)
    if (static_cast<int>(id) == joint) return true;
  return false;
}

}  // namespace

GeneratedSequence generate_sequence(const SynthConfig& config, int index) {
  config.validate();
  const SkeletonGraph& skeleton = default_skeleton();

  // Interleaved class assignment matching class_balance exactly in the large.
  const auto bucket = [&](int i) {
    return static_cast<long>(std::floor((i + 1) * config.class_balance)) -
           static_cast<long>(std::floor(i * config.class_balance));
  };
  const int label = bucket(index) > 0 ? 1 : 0;

  Rng seq_rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));
  Rng traj_rng = seq_rng.fork(1);
  Rng corrupt_rng = seq_rng.fork(2);

  const double amp_factor = label == 1 ? 1.0 : 1.0 - config.amplitude_gap;
  const double freq_factor = label == 1 ? 1.0 : config.class0_frequency_factor();
  const double axis_amp = config.signal_amplitude / std::sqrt(3.0);

  std::vector<std::array<AxisTrajectory, 3>> traj(kJointCount);
  for (int j = 0; j < kJointCount; ++j) {
    const bool signal = is_signal_joint(config, j);
    for (int axis = 0; axis < 3; ++axis) {
      AxisTrajectory& a = traj[static_cast<std::size_t>(j)][static_cast<std::size_t>(axis)];
      if (signal) {
        a.amplitude = axis_amp * amp_factor;
        a.frequency = config.signal_frequency * freq_factor;
      } else {
        a.amplitude = traj_rng.uniform(config.baseline_amplitude_min,
                                       config.baseline_amplitude_max);
        a.frequency = traj_rng.uniform(config.baseline_frequency_min,
                                       config.baseline_frequency_max);
      }
      a.phase = traj_rng.uniform(0.0, 2.0 * M_PI);
    }
  }

  GeneratedSequence out;
  out.label = label;
  {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "seq_%04d", index);
    out.id = buf;
  }
  out.sequence.kind = SkeletonKind::Pruned17;
  out.sequence.frame_rate = config.frame_rate;

  const double dt = 1.0 / config.frame_rate;
  for (int t = 0; t < config.frames; ++t) {
    RawFrame frame;
    frame.index = t;
    frame.joints.assign(kJointCount, std::nullopt);
    for (int j = 0; j < kJointCount; ++j) {
      Vec3 p = skeleton.reference_pose[static_cast<std::size_t>(j)];
      for (int axis = 0; axis < 3; ++axis) {
        const AxisTrajectory& a = traj[static_cast<std::size_t>(j)][static_cast<std::size_t>(axis)];
        p[static_cast<std::size_t>(axis)] +=
            a.amplitude * std::sin(2.0 * M_PI * a.frequency * t * dt + a.phase);
        if (config.noise_std > 0.0)
          p[static_cast<std::size_t>(axis)] += corrupt_rng.normal(0.0, config.noise_std);
      }
      frame.joints[static_cast<std::size_t>(j)] = p;
    }

    // coordinate spikes; the median filter is expected to absorb these
    for (int j = 0; j < kJointCount; ++j) {
      if (config.outlier_rate > 0.0 && corrupt_rng.uniform() < config.outlier_rate) {
        const int axis = static_cast<int>(corrupt_rng.uniform_int(3));
        const double sign = corrupt_rng.uniform() < 0.5 ? -1.0 : 1.0;
        (*frame.joints[static_cast<std::size_t>(j)])[static_cast<std::size_t>(axis)] +=
            sign * corrupt_rng.uniform(0.3, 0.8);
      }
    }

    const bool drop =
        config.missing_rate > 0.0 && corrupt_rng.uniform() < config.missing_rate;
    if (!drop) out.sequence.frames.push_back(std::move(frame));
  }
  return out;
}

std::vector<GeneratedSequence> generate_sequences(const SynthConfig& config) {
  config.validate();
  std::vector<GeneratedSequence> all;
  all.reserve(static_cast<std::size_t>(config.n_sequences));
  for (int i = 0; i < config.n_sequences; ++i) all.push_back(generate_sequence(config, i));
  return all;
}

std::string write_dataset(const SynthConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
  if (!manifest) throw DataError("cannot write manifest in " + out_dir);
  manifest << "sequence_path,subject_id,action,fim_item,fim_score\n";

  for (int i = 0; i < config.n_sequences; ++i) {
    GeneratedSequence g = generate_sequence(config, i);
    const std::string file_name = g.id + ".jsonl";
    std::ofstream seq_out(fs::path(out_dir) / file_name);
    if (!seq_out) throw DataError("cannot write sequence file in " + out_dir);
    write_sequence(seq_out, g.sequence);

    manifest << file_name << ",subj_" << g.id << ',' << config.action << ','
             << config.fim_item << ','
             << (g.label == 1 ? config.independent_score : config.assisted_score) << '\n';
  }
  return (fs::path(out_dir) / "manifest.csv").string();
}

double signal_speed_statistic(const RawSequence& seq, const SynthConfig& config) {
  if (seq.frames.size() < 2) throw DataError("sequence too short for the speed statistic");
  const double dt = 1.0 / seq.frame_rate;
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t f = 1; f < seq.frames.size(); ++f) {
    const auto& prev = seq.frames[f - 1];
    const auto& cur = seq.frames[f];
    if (cur.index != prev.index + 1) continue;  // only adjacent observed pairs
    for (JointId id : config.signal_joints) {
      const auto j = static_cast<std::size_t>(id);
      if (!prev.joints[j] || !cur.joints[j]) continue;
      for (int axis = 0; axis < 3; ++axis) {
        sum += std::abs((*cur.joints[j])[static_cast<std::size_t>(axis)] -
                        (*prev.joints[j])[static_cast<std::size_t>(axis)]) /
               dt;
        ++count;
      }
    }
  }
  if (count == 0) throw DataError("no adjacent observations of the signal joints");
  return sum / static_cast<double>(count);
}

double oracle_threshold(const SynthConfig& config) {
  // Time-averaged |d/dt A sin(2 pi f t)| = 4 A f per axis.
  const double axis_amp = config.signal_amplitude / std::sqrt(3.0);
  const double mean1 = 4.0 * axis_amp * config.signal_frequency;
  const double mean0 = 4.0 * axis_amp * (1.0 - config.amplitude_gap) *
                       config.signal_frequency * config.class0_frequency_factor();
  return 0.5 * (mean0 + mean1);
}

int oracle_label(const RawSequence& seq, const SynthConfig& config) {
  return signal_speed_statistic(seq, config) > oracle_threshold(config) ? 1 : 0;
}

}  // namespace fimnet
