#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fimnet {

using Vec3 = std::array<double, 3>;

// The 17 joints kept after extremity pruning. Codes are stable and used as
// matrix indices everywhere downstream.
enum class JointId : int {
  SpineBase = 0,
  SpineMid = 1,
  SpineShoulder = 2,
  Neck = 3,
  Head = 4,
  ShoulderLeft = 5,
  ShoulderRight = 6,
  ElbowLeft = 7,
  ElbowRight = 8,
  WristLeft = 9,
  WristRight = 10,
  HipLeft = 11,
  HipRight = 12,
  KneeLeft = 13,
  KneeRight = 14,
  AnkleLeft = 15,
  AnkleRight = 16,
};

inline constexpr int kJointCount = 17;
inline constexpr int kCaptureJointCount = 25;

const std::vector<std::string>& joint_names();           // the 17 kept joints
const std::vector<std::string>& capture_joint_names();   // the 25-joint capture set
const std::vector<std::string>& pruned_joint_names();    // the 8 extremity points

// -1 if the name is not in the given set.
int joint_index(const std::string& name);
int capture_joint_index(const std::string& name);

std::optional<JointId> joint_from_name(const std::string& name);
const std::string& joint_name(JointId id);

// Undirected spatial skeleton: a connected tree over the joints plus a
// reference pose used to orient the graph relative to the body center.
struct SkeletonGraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;
  int root = static_cast<int>(JointId::SpineMid);
  std::vector<Vec3> reference_pose;

  // parent[j] on the path to root; parent[root] = -1.
  std::vector<int> parent;

  const std::vector<std::string>* names = nullptr;  // joint_names() for the default skeleton
};

// Validates that the edge table is a connected simple tree and computes the
// parent map. Throws DisconnectedGraphError / DataError otherwise.
SkeletonGraph build_graph(int node_count, std::vector<std::pair<int, int>> edges,
                          int root, std::vector<Vec3> reference_pose);

// The 17-joint skeleton with its canonical neutral reference pose.
const SkeletonGraph& default_skeleton();

// Skeleton definition file: {"edges": [[a,b],...], "root": name,
// "reference_pose": {name: [x,y,z]}} with the 17-joint name set.
SkeletonGraph load_skeleton_json(std::istream& in);
SkeletonGraph load_skeleton_file(const std::string& path);

}  // namespace fimnet
