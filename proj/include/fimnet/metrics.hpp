#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fimnet/tensor.hpp"

namespace fimnet {

// Rows are ground truth, columns predictions.
struct ConfusionMatrix {
  int class_count = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int k = 2)
      : class_count(k), counts(static_cast<std::size_t>(k) * k, 0) {}

  void add(int truth, int prediction) {
    counts[static_cast<std::size_t>(truth) * class_count + prediction] += 1;
  }
  std::int64_t at(int truth, int prediction) const {
    return counts[static_cast<std::size_t>(truth) * class_count + prediction];
  }
  std::int64_t total() const {
    std::int64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

// Mean of per-class recalls. Every true class must have at least one sample.
double balanced_accuracy(const ConfusionMatrix& cm);

// Per-class recall vector.
std::vector<double> classwise_accuracy(const ConfusionMatrix& cm);

struct SeedAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1); 0 for a single run
  int n = 0;
};

SeedAggregate aggregate_seeds(const std::vector<double>& values);

struct MetricsReport {
  std::string fim_item;
  std::string action;
  std::uint64_t seed = 0;
  ConfusionMatrix confusion;
  std::vector<double> classwise_acc;
  double balanced_acc = 0.0;

  std::string to_json() const;
};

// Per-(frame, joint) saliency: the product of temporal and spatial attention
// weights. Entries are nonnegative and sum to 1.
struct AttentionMap {
  Tensor<double> weights;  // [T_out x J]
  std::string sequence_id;
  std::vector<std::string> joint_names;
  int temporal_downsample = 1;
};

AttentionMap make_attention_map(const Tensor<double>& alpha, const Tensor<double>& beta,
                                const std::vector<std::string>& joint_names,
                                int temporal_downsample, std::string sequence_id);

// CSV with a `frame,joint,weight` header; the temporal downsampling factor is
// recorded in a leading comment line.
void write_attention_csv(std::ostream& out, const AttentionMap& map);

}  // namespace fimnet
