#include "fimnet/skeleton.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <queue>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "fimnet/errors.hpp"

namespace fimnet {

const std::vector<std::string>& joint_names() {
  static const std::vector<std::string> names = {
      "SpineBase",  "SpineMid",      "SpineShoulder", "Neck",
      "Head",       "ShoulderLeft",  "ShoulderRight", "ElbowLeft",
      "ElbowRight", "WristLeft",     "WristRight",    "HipLeft",
      "HipRight",   "KneeLeft",      "KneeRight",     "AnkleLeft",
      "AnkleRight"};
  return names;
}

const std::vector<std::string>& pruned_joint_names() {
  static const std::vector<std::string> names = {
      "HandLeft",    "HandRight",  "HandTipLeft", "HandTipRight",
      "ThumbLeft",   "ThumbRight", "FootLeft",    "FootRight"};
  return names;
}

const std::vector<std::string>& capture_joint_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> all = joint_names();
    const auto& extra = pruned_joint_names();
    all.insert(all.end(), extra.begin(), extra.end());
    return all;
  }();
  return names;
}

namespace {
const std::unordered_map<std::string, int>& name_lookup(const std::vector<std::string>& names) {
  static std::unordered_map<const std::vector<std::string>*,
                            std::unordered_map<std::string, int>>
      cache;
  auto it = cache.find(&names);
  if (it == cache.end()) {
    std::unordered_map<std::string, int> m;
    for (int i = 0; i < static_cast<int>(names.size()); ++i) m[names[i]] = i;
    it = cache.emplace(&names, std::move(m)).first;
  }
  return it->second;
}
}  // namespace

int joint_index(const std::string& name) {
  const auto& m = name_lookup(joint_names());
  auto it = m.find(name);
  return it == m.end() ? -1 : it->second;
}

int capture_joint_index(const std::string& name) {
  const auto& m = name_lookup(capture_joint_names());
  auto it = m.find(name);
  return it == m.end() ? -1 : it->second;
}

std::optional<JointId> joint_from_name(const std::string& name) {
  int i = joint_index(name);
  if (i < 0) return std::nullopt;
  return static_cast<JointId>(i);
}

const std::string& joint_name(JointId id) {
  return joint_names()[static_cast<std::size_t>(id)];
}

SkeletonGraph build_graph(int node_count, std::vector<std::pair<int, int>> edges,
                          int root, std::vector<Vec3> reference_pose) {
  if (node_count < 1) throw DataError("skeleton needs at least one joint");
  if (root < 0 || root >= node_count) throw DataError("root joint out of range");
  if (static_cast<int>(reference_pose.size()) != node_count)
    throw DataError("reference pose size does not match joint count");

  std::set<std::pair<int, int>> seen;
  for (auto& [a, b] : edges) {
    if (a < 0 || a >= node_count || b < 0 || b >= node_count)
      throw DataError("edge endpoint out of range");
    if (a == b) throw DataError("self-loop edge rejected");
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second) throw DataError("duplicate edge rejected");
  }
  if (static_cast<int>(edges.size()) != node_count - 1)
    throw DisconnectedGraphError("edge table is not a tree: expected " +
                                 std::to_string(node_count - 1) + " edges, got " +
                                 std::to_string(edges.size()));

  // BFS from root; a tree with J-1 edges is connected iff all nodes reached.
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(node_count));
  for (auto& [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<int> parent(static_cast<std::size_t>(node_count), -2);
  std::queue<int> queue;
  queue.push(root);
  parent[static_cast<std::size_t>(root)] = -1;
  int reached = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop();
    ++reached;
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (parent[static_cast<std::size_t>(v)] == -2) {
        parent[static_cast<std::size_t>(v)] = u;
        queue.push(v);
      }
    }
  }
  if (reached != node_count)
    throw DisconnectedGraphError("skeleton graph is disconnected");

  SkeletonGraph g;
  g.node_count = node_count;
  g.edges = std::move(edges);
  g.root = root;
  g.reference_pose = std::move(reference_pose);
  g.parent = std::move(parent);
  return g;
}

const SkeletonGraph& default_skeleton() {
  static const SkeletonGraph graph = [] {
    using J = JointId;
    auto e = [](J a, J b) {
      return std::make_pair(static_cast<int>(a), static_cast<int>(b));
    };
    std::vector<std::pair<int, int>> edges = {
        e(J::SpineBase, J::SpineMid),
        e(J::SpineMid, J::SpineShoulder),
        e(J::SpineShoulder, J::Neck),
        e(J::Neck, J::Head),
        e(J::SpineShoulder, J::ShoulderLeft),
        e(J::ShoulderLeft, J::ElbowLeft),
        e(J::ElbowLeft, J::WristLeft),
        e(J::SpineShoulder, J::ShoulderRight),
        e(J::ShoulderRight, J::ElbowRight),
        e(J::ElbowRight, J::WristRight),
        e(J::SpineBase, J::HipLeft),
        e(J::HipLeft, J::KneeLeft),
        e(J::KneeLeft, J::AnkleLeft),
        e(J::SpineBase, J::HipRight),
        e(J::HipRight, J::KneeRight),
        e(J::KneeRight, J::AnkleRight),
    };

    // Neutral standing pose, arms slightly raised to the sides so the
    // center distance grows strictly outward along every limb. Small
    // left/right offsets keep all center distances distinct.
    std::vector<Vec3> pose(kJointCount);
    auto set = [&pose](J j, double x, double y, double z) {
      pose[static_cast<std::size_t>(j)] = {x, y, z};
    };
    set(J::SpineBase, 0.000, 1.000, 0.000);
    set(J::SpineMid, 0.000, 1.250, 0.000);
    set(J::SpineShoulder, 0.000, 1.520, 0.000);
    set(J::Neck, 0.000, 1.600, 0.000);
    set(J::Head, 0.000, 1.730, 0.000);
    set(J::ShoulderLeft, -0.180, 1.500, 0.000);
    set(J::ShoulderRight, 0.183, 1.500, 0.000);
    set(J::ElbowLeft, -0.450, 1.480, 0.000);
    set(J::ElbowRight, 0.453, 1.480, 0.000);
    set(J::WristLeft, -0.700, 1.460, 0.000);
    set(J::WristRight, 0.703, 1.460, 0.000);
    set(J::HipLeft, -0.090, 0.970, 0.000);
    set(J::HipRight, 0.093, 0.970, 0.000);
    set(J::KneeLeft, -0.100, 0.520, 0.000);
    set(J::KneeRight, 0.103, 0.520, 0.000);
    set(J::AnkleLeft, -0.110, 0.080, 0.000);
    set(J::AnkleRight, 0.113, 0.080, 0.000);

    SkeletonGraph g = build_graph(kJointCount, std::move(edges),
                                  static_cast<int>(J::SpineMid), std::move(pose));
    g.names = &joint_names();
    return g;
  }();
  return graph;
}

SkeletonGraph load_skeleton_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid skeleton JSON: ") + e.what());
  }
  if (!doc.contains("edges") || !doc.contains("root") || !doc.contains("reference_pose"))
    throw DataError("skeleton JSON needs edges, root and reference_pose");

  auto index_of = [](const std::string& name) {
    int i = joint_index(name);
    if (i < 0) throw UnknownJointError(name);
    return i;
  };

  std::vector<std::pair<int, int>> edges;
  for (const auto& e : doc["edges"]) {
    if (!e.is_array() || e.size() != 2)
      throw DataError("skeleton edge must be a [nameA, nameB] pair");
    edges.emplace_back(index_of(e[0].get<std::string>()),
                       index_of(e[1].get<std::string>()));
  }
  int root = index_of(doc["root"].get<std::string>());

  std::vector<Vec3> pose(kJointCount, Vec3{0, 0, 0});
  std::vector<bool> have(kJointCount, false);
  for (const auto& [name, coords] : doc["reference_pose"].items()) {
    int i = index_of(name);
    if (!coords.is_array() || coords.size() != 3)
      throw DataError("reference_pose entry must be [x,y,z]");
    pose[static_cast<std::size_t>(i)] = {coords[0].get<double>(),
                                         coords[1].get<double>(),
                                         coords[2].get<double>()};
    have[static_cast<std::size_t>(i)] = true;
  }
  for (int i = 0; i < kJointCount; ++i)
    if (!have[static_cast<std::size_t>(i)])
      throw DataError("reference_pose missing joint " + joint_names()[static_cast<std::size_t>(i)]);

  SkeletonGraph g = build_graph(kJointCount, std::move(edges), root, std::move(pose));
  g.names = &joint_names();
  return g;
}

SkeletonGraph load_skeleton_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open skeleton file: " + path);
  return load_skeleton_json(in);
}

}  // namespace fimnet
