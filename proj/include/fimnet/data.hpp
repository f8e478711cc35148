#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fimnet/features.hpp"
#include "fimnet/ingest.hpp"
#include "fimnet/rng.hpp"
#include "fimnet/skeleton.hpp"
#include "fimnet/tensor.hpp"

namespace fimnet {

const std::vector<std::string>& known_actions();

struct ManifestRow {
  std::string sequence_path;
  std::string subject_id;
  std::string action;
  std::string fim_item;
  int fim_score = 0;
};

// CSV columns: sequence_path, subject_id, action, fim_item, fim_score.
// Validates the action vocabulary and the 1..7 score range.
std::vector<ManifestRow> load_manifest(const std::string& path);

// Complete independence (score 7) against everything that needs assistance.
struct LabelSpec {
  std::string fim_item;
  int class_count = 2;

  int label_of(const ManifestRow& row) const { return row.fim_score == 7 ? 1 : 0; }
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified holdout: per class, round-half-up of (1 - train_fraction) * n
// samples drawn without replacement into the test set. Every class needs at
// least 2 samples.
Split stratified_split(const std::vector<int>& labels, double train_fraction,
                       std::uint64_t seed);

// Draws training indices with replacement, each index weighted by the inverse
// frequency of its class, so batches are class-balanced in expectation.
class WeightedSampler {
public:
  WeightedSampler(const std::vector<int>& labels, std::uint64_t seed);

  std::size_t next();
  std::size_t epoch_length() const { return cdf_.size(); }

private:
  std::vector<double> cdf_;
  Rng rng_;
};

// Sequences cleaned, featurized and labeled; what the training loop consumes.
struct FeaturizedDataset {
  std::vector<Tensor<float>> features;  // each [9 x T x J]
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return features.size(); }
};

// Runs the cleaning pipeline and feature assembly for each manifest row.
// Paths are resolved relative to the manifest location. `threads` > 1
// featurizes in parallel without changing the output order.
FeaturizedDataset featurize_manifest(const std::vector<ManifestRow>& rows,
                                     const std::string& manifest_dir,
                                     const SkeletonGraph& graph, const LabelSpec& label_spec,
                                     const CleaningOptions& cleaning = {}, int threads = 1);

FeaturizedDataset select(const FeaturizedDataset& all, const std::vector<std::size_t>& idx);

}  // namespace fimnet
