#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fimnet/data.hpp"
#include "fimnet/model.hpp"
#include "fimnet/optimizer.hpp"
#include "fimnet/partition.hpp"

namespace fimnet {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 0;
  OneCycleConfig schedule;  // max_lr 0.01, warmup 0.3, div 25, final div 1e4
  AdamConfig adam;
  int threads = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr_last = 0.0;
  double test_balanced_accuracy = 0.0;
};

struct TrainResult {
  ParameterStore<float> params;
  std::vector<EpochRecord> history;
  bool aborted = false;
  std::string abort_reason;
};

// Weighted-sampled mini-batch training with one-cycle Adam. Single-threaded
// runs are bit-reproducible for a fixed seed; multi-threaded runs compute
// per-sample gradients in parallel but reduce them in sample order, so the
// result does not depend on the thread count.
TrainResult train_loop(const FeaturizedDataset& train_set, const FeaturizedDataset& test_set,
                       const Partition& partition, const ModelConfig& model_config,
                       const TrainConfig& train_config);

std::string history_to_json(const std::vector<EpochRecord>& history);

}  // namespace fimnet
