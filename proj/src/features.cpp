#include "fimnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fimnet/errors.hpp"

namespace fimnet {

namespace {
constexpr double kDegenerateNorm = 1e-8;
constexpr std::uint32_t kFeatureMagic = 0x464E5446;  // "FTNF"
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

Tensor<double> velocity(const CleanSequence& seq) {
  if (seq.frame_count < 2) throw DataError("velocity needs at least 2 frames");
  if (!(seq.frame_interval > 0.0)) throw DataError("frame interval must be positive");

  const int t_count = seq.frame_count;
  const int j_count = seq.joint_count;
  Tensor<double> out({3, t_count, j_count});
  const double inv_dt = 1.0 / seq.frame_interval;

  for (int t = 1; t < t_count; ++t)
    for (int j = 0; j < j_count; ++j)
      for (int axis = 0; axis < 3; ++axis)
        out.at(axis, t, j) = (seq.at(t, j, axis) - seq.at(t - 1, j, axis)) * inv_dt;

  // no preceding frame at t = 0; replicate the first defined value
  for (int j = 0; j < j_count; ++j)
    for (int axis = 0; axis < 3; ++axis) out.at(axis, 0, j) = out.at(axis, 1, j);
  return out;
}

Tensor<double> angles(const CleanSequence& seq, const SkeletonGraph& graph) {
  if (graph.node_count != seq.joint_count)
    throw DataError("skeleton joint count does not match sequence");

  const int t_count = seq.frame_count;
  const int j_count = seq.joint_count;
  Tensor<double> out({3, t_count, j_count});
  constexpr double half_pi = M_PI / 2.0;

  for (int j = 0; j < j_count; ++j) {
    const int parent = graph.parent[static_cast<std::size_t>(j)];
    if (parent < 0) continue;  // root stays (0,0,0)
    for (int t = 0; t < t_count; ++t) {
      const double lx = seq.at(t, j, 0) - seq.at(t, parent, 0);
      const double ly = seq.at(t, j, 1) - seq.at(t, parent, 1);
      const double lz = seq.at(t, j, 2) - seq.at(t, parent, 2);
      const double norm = std::sqrt(lx * lx + ly * ly + lz * lz);
      if (norm < kDegenerateNorm) {
        // direction undefined; orthogonal-neutral angles
        out.at(0, t, j) = half_pi;
        out.at(1, t, j) = half_pi;
        out.at(2, t, j) = half_pi;
        continue;
      }
      const double l[3] = {lx, ly, lz};
      for (int axis = 0; axis < 3; ++axis) {
        const double c = std::clamp(l[axis] / norm, -1.0, 1.0);
        out.at(axis, t, j) = std::acos(c);
      }
    }
  }
  return out;
}

FeatureTensor assemble(const CleanSequence& seq, const SkeletonGraph& graph,
                       const FeatureMask& mask) {
  const int t_count = seq.frame_count;
  const int j_count = seq.joint_count;

  FeatureTensor tensor;
  tensor.values = Tensor<double>({kFeatureChannels, t_count, j_count});

  if (mask.coordinates) {
    for (int axis = 0; axis < 3; ++axis)
      for (int t = 0; t < t_count; ++t)
        for (int j = 0; j < j_count; ++j)
          tensor.values.at(axis, t, j) = seq.at(t, j, axis);
  }
  if (mask.velocity) {
    Tensor<double> vel = velocity(seq);
    for (int axis = 0; axis < 3; ++axis)
      for (int t = 0; t < t_count; ++t)
        for (int j = 0; j < j_count; ++j)
          tensor.values.at(3 + axis, t, j) = vel.at(axis, t, j);
  }
  if (mask.angle) {
    Tensor<double> ang = angles(seq, graph);
    for (int axis = 0; axis < 3; ++axis)
      for (int t = 0; t < t_count; ++t)
        for (int j = 0; j < j_count; ++j)
          tensor.values.at(6 + axis, t, j) = ang.at(axis, t, j);
  }
  return tensor;
}

namespace {
void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4))
    throw DataError("feature dump truncated");
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}
}  // namespace

void dump_features(std::ostream& out, const FeatureTensor& tensor) {
  write_u32(out, kFeatureMagic);
  write_u32(out, kFeatureVersion);
  write_u32(out, static_cast<std::uint32_t>(tensor.frames()));
  write_u32(out, static_cast<std::uint32_t>(tensor.joints()));
  for (double v : tensor.values.data) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(out, bits);
  }
}

FeatureTensor load_features(std::istream& in) {
  if (read_u32(in) != kFeatureMagic) throw DataError("not a feature dump (bad magic)");
  const std::uint32_t version = read_u32(in);
  if (version != kFeatureVersion)
    throw DataError("unsupported feature dump version " + std::to_string(version));
  const int t_count = static_cast<int>(read_u32(in));
  const int j_count = static_cast<int>(read_u32(in));

  FeatureTensor tensor;
  tensor.values = Tensor<double>({kFeatureChannels, t_count, j_count});
  for (double& v : tensor.values.data) {
    const std::uint32_t bits = read_u32(in);
    float f;
    std::memcpy(&f, &bits, 4);
    v = static_cast<double>(f);
  }
  return tensor;
}

void dump_features_file(const std::string& path, const FeatureTensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open feature dump for writing: " + path);
  dump_features(out, tensor);
}

FeatureTensor load_features_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature dump: " + path);
  return load_features(in);
}

}  // namespace fimnet
