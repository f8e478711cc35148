#pragma once

#include <array>
#include <vector>

#include "fimnet/skeleton.hpp"
#include "fimnet/tensor.hpp"

namespace fimnet {

inline constexpr double kDegreeEpsilon = 1e-3;  // keeps leaf/root rows invertible

// Three-way edge partition of the skeleton tree relative to the body center:
// group 0 holds self-connections (and exact distance ties), group 1 neighbors
// closer to the center, group 2 neighbors farther away.
struct Partition {
  int node_count = 0;
  std::array<Tensor<double>, 3> adjacency;      // A_m, J x J
  std::array<std::vector<double>, 3> degree;    // diagonal of Lambda_m = row sums + alpha
  std::array<std::vector<double>, 3> inv_sqrt_degree;
  std::vector<double> center_distance;          // r_j in the reference pose
  double alpha = kDegreeEpsilon;
};

// Distances are taken from the graph's reference pose to its root joint, so
// the partition is a constant of the model, not of any one sequence.
Partition label_partitions(const SkeletonGraph& graph, double alpha = kDegreeEpsilon);

// Lambda_m^{-1/2} (A_m (.) M) Lambda_m^{-1/2} for m in {0,1,2}, where (.) is
// the elementwise product with the J x J importance mask.
std::array<Tensor<double>, 3> normalized_adjacency(const Partition& partition,
                                                   const Tensor<double>& mask);

}  // namespace fimnet
