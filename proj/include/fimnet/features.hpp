#pragma once

#include <iosfwd>
#include <string>

#include "fimnet/sequence.hpp"
#include "fimnet/skeleton.hpp"
#include "fimnet/tensor.hpp"

namespace fimnet {

inline constexpr int kFeatureChannels = 9;  // p_x,p_y,p_z, s_x,s_y,s_z, a_x,a_y,a_z

// Channel groups that can be zeroed for ablations. Zeroing keeps the input
// dimension fixed so one architecture serves every configuration.
struct FeatureMask {
  bool coordinates = true;
  bool velocity = true;
  bool angle = true;

  bool all() const { return coordinates && velocity && angle; }
  static FeatureMask coords_only() { return {true, false, false}; }
};

// 9 x T x J input tensor in the channel order above.
struct FeatureTensor {
  Tensor<double> values;

  int channels() const { return values.dim(0); }
  int frames() const { return values.dim(1); }
  int joints() const { return values.dim(2); }
};

// Frame-difference velocities normalized by the frame interval; the first
// frame replicates the second so the tensor stays full length. [3 x T x J].
Tensor<double> velocity(const CleanSequence& seq);

// Per-axis angles between the vector toward the center-ward neighbor (the
// parent in the tree rooted at the body center) and each coordinate axis,
// in [0, pi]. The root joint gets (0,0,0). [3 x T x J].
Tensor<double> angles(const CleanSequence& seq, const SkeletonGraph& graph);

FeatureTensor assemble(const CleanSequence& seq, const SkeletonGraph& graph,
                       const FeatureMask& mask = {});

// Binary feature dump: 16-byte header (magic, version, T, J as u32 LE) then
// float32 LE values in channel-major [9][T][J] order.
void dump_features(std::ostream& out, const FeatureTensor& tensor);
FeatureTensor load_features(std::istream& in);
void dump_features_file(const std::string& path, const FeatureTensor& tensor);
FeatureTensor load_features_file(const std::string& path);

}  // namespace fimnet
