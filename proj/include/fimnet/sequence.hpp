#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fimnet/skeleton.hpp"

namespace fimnet {

enum class SkeletonKind { Kinect25, Pruned17 };

inline int joint_count_of(SkeletonKind kind) {
  return kind == SkeletonKind::Kinect25 ? kCaptureJointCount : kJointCount;
}

const std::vector<std::string>& joint_names_of(SkeletonKind kind);

// Raw capture output: frames sorted by index, gaps permitted, any joint may
// be missing in any frame.
struct RawFrame {
  std::int64_t index = 0;
  std::vector<std::optional<Vec3>> joints;  // one slot per skeleton joint
};

struct RawSequence {
  SkeletonKind kind = SkeletonKind::Kinect25;
  double frame_rate = 30.0;
  std::vector<RawFrame> frames;

  int joint_count() const { return joint_count_of(kind); }
};

// Gap-free, uniformly sampled positions; what the filters operate on.
struct DenseSequence {
  SkeletonKind kind = SkeletonKind::Pruned17;
  double frame_rate = 30.0;
  int frame_count = 0;
  std::vector<double> positions;  // [T x J x 3] row-major

  int joint_count() const { return joint_count_of(kind); }
  double& at(int t, int j, int axis) {
    return positions[(static_cast<std::size_t>(t) * joint_count() + j) * 3 + axis];
  }
  double at(int t, int j, int axis) const {
    return positions[(static_cast<std::size_t>(t) * joint_count() + j) * 3 + axis];
  }
};

// Cleaned, pruned, fixed-length input to the feature stage.
struct CleanSequence {
  int frame_count = 0;                     // T
  int joint_count = kJointCount;           // J
  double frame_interval = 1.0 / 30.0;      // seconds
  std::vector<double> positions;           // [T x J x 3]

  double& at(int t, int j, int axis) {
    return positions[(static_cast<std::size_t>(t) * joint_count + j) * 3 + axis];
  }
  double at(int t, int j, int axis) const {
    return positions[(static_cast<std::size_t>(t) * joint_count + j) * 3 + axis];
  }
};

}  // namespace fimnet
