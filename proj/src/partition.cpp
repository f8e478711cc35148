#include "fimnet/partition.hpp"

#include <cmath>

#include "fimnet/errors.hpp"

namespace fimnet {

namespace {
double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}
}  // namespace

Partition label_partitions(const SkeletonGraph& graph, double alpha) {
  if (alpha <= 0.0) throw ConfigError("degree regularizer must be positive");
  const int j_count = graph.node_count;

  Partition p;
  p.node_count = j_count;
  p.alpha = alpha;
  for (auto& a : p.adjacency) a = Tensor<double>::zeros({j_count, j_count});

  p.center_distance.resize(static_cast<std::size_t>(j_count));
  const Vec3& center = graph.reference_pose[static_cast<std::size_t>(graph.root)];
  for (int j = 0; j < j_count; ++j)
    p.center_distance[static_cast<std::size_t>(j)] =
        distance(graph.reference_pose[static_cast<std::size_t>(j)], center);

  // Self-connections are the root-node group.
  for (int j = 0; j < j_count; ++j) p.adjacency[0].at(j, j) = 1.0;

  // Row j aggregates from neighbor j'; the group is decided by whether j'
  // is closer to the center than j, farther, or exactly as far.
  for (const auto& [a, b] : graph.edges) {
    const double ra = p.center_distance[static_cast<std::size_t>(a)];
    const double rb = p.center_distance[static_cast<std::size_t>(b)];
    auto group_of = [](double r_self, double r_neighbor) {
      if (r_neighbor == r_self) return 0;
      return r_neighbor < r_self ? 1 : 2;
    };
    p.adjacency[static_cast<std::size_t>(group_of(ra, rb))].at(a, b) = 1.0;
    p.adjacency[static_cast<std::size_t>(group_of(rb, ra))].at(b, a) = 1.0;
  }

  for (int m = 0; m < 3; ++m) {
    auto& deg = p.degree[static_cast<std::size_t>(m)];
    auto& inv = p.inv_sqrt_degree[static_cast<std::size_t>(m)];
    deg.resize(static_cast<std::size_t>(j_count));
    inv.resize(static_cast<std::size_t>(j_count));
    for (int i = 0; i < j_count; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < j_count; ++j)
        row_sum += p.adjacency[static_cast<std::size_t>(m)].at(i, j);
      deg[static_cast<std::size_t>(i)] = row_sum + alpha;
      inv[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(row_sum + alpha);
    }
  }
  return p;
}

std::array<Tensor<double>, 3> normalized_adjacency(const Partition& partition,
                                                   const Tensor<double>& mask) {
  const int j_count = partition.node_count;
  if (mask.ndim() != 2 || mask.dim(0) != j_count || mask.dim(1) != j_count)
    throw DataError("importance mask shape must be J x J");
  for (double v : mask.data)
    if (!std::isfinite(v)) throw NumericError("importance mask has non-finite entries");

  std::array<Tensor<double>, 3> out;
  for (int m = 0; m < 3; ++m) {
    const auto& a = partition.adjacency[static_cast<std::size_t>(m)];
    const auto& inv = partition.inv_sqrt_degree[static_cast<std::size_t>(m)];
    Tensor<double> s({j_count, j_count});
    for (int i = 0; i < j_count; ++i)
      for (int j = 0; j < j_count; ++j)
        s.at(i, j) = inv[static_cast<std::size_t>(i)] * a.at(i, j) * mask.at(i, j) *
                     inv[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(m)] = std::move(s);
  }
  return out;
}

}  // namespace fimnet
