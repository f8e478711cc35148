#include <doctest.h>

#include <cmath>
#include <map>

#include "fimnet/data.hpp"
#include "fimnet/errors.hpp"
#include "fimnet/optimizer.hpp"
#include "fimnet/trainloop.hpp"
#include "test_helpers.hpp"

using namespace fimnet;

TEST_CASE("stratified split reproduces the documented per-class counts") {
  std::vector<int> labels;
  labels.insert(labels.end(), 124, 0);
  labels.insert(labels.end(), 153, 1);

  Split split = stratified_split(labels, 0.8, 7);
  std::map<int, int> train_counts, test_counts;
  for (auto i : split.train) train_counts[labels[i]]++;
  for (auto i : split.test) test_counts[labels[i]]++;

  CHECK(test_counts[0] == 25);   // round(0.2 * 124) = round(24.8)
  CHECK(test_counts[1] == 31);   // round(0.2 * 153) = round(30.6)
  CHECK(train_counts[0] == 99);
  CHECK(train_counts[1] == 122);

  // disjoint and exhaustive
  std::vector<bool> seen(labels.size(), false);
  for (auto i : split.train) seen[i] = true;
  for (auto i : split.test) {
    CHECK(!seen[i]);
    seen[i] = true;
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("stratified split rejects classes with fewer than 2 samples") {
  std::vector<int> labels(10, 0);
  CHECK_THROWS_AS(stratified_split(labels, 0.8, 0), DataError);
  labels[3] = 1;  // one sample of class 1
  CHECK_THROWS_AS(stratified_split(labels, 0.8, 0), DataError);
}

TEST_CASE("stratified split is deterministic per seed") {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 2);
  Split a = stratified_split(labels, 0.8, 42);
  Split b = stratified_split(labels, 0.8, 42);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  Split c = stratified_split(labels, 0.8, 43);
  CHECK(a.test != c.test);
}

TEST_CASE("weighted sampler balances a 90/10 class split") {
  std::vector<int> labels;
  labels.insert(labels.end(), 900, 0);
  labels.insert(labels.end(), 100, 1);
  WeightedSampler sampler(labels, 0);

  const int draws = 100000;
  int minority = 0;
  for (int i = 0; i < draws; ++i)
    if (labels[sampler.next()] == 1) ++minority;
  const double fraction = static_cast<double>(minority) / draws;
  CHECK(fraction >= 0.48);
  CHECK(fraction <= 0.52);
}

TEST_CASE("weighted sampler draws within 3 sigma of the multinomial model") {
  std::vector<int> labels;
  labels.insert(labels.end(), 300, 0);
  labels.insert(labels.end(), 700, 1);
  WeightedSampler sampler(labels, 9);
  const int draws = 10000;
  int class1 = 0;
  for (int i = 0; i < draws; ++i)
    if (labels[sampler.next()] == 1) ++class1;
  const double sigma = std::sqrt(0.25 * draws);
  CHECK(std::abs(class1 - draws / 2.0) <= 3.0 * sigma);
}

TEST_CASE("weighted sampler is deterministic and rejects single-class sets") {
  std::vector<int> labels = {0, 1, 0, 1, 1};
  WeightedSampler a(labels, 5), b(labels, 5);
  for (int i = 0; i < 50; ++i) CHECK(a.next() == b.next());
  CHECK_THROWS_AS(WeightedSampler(std::vector<int>(4, 0), 0), DataError);
}

TEST_CASE("one-cycle schedule hits the documented boundary values") {
  OneCycleConfig cfg;  // max 0.01, warmup 0.3, div 25, final div 1e4
  const std::int64_t total = 1000;
  CHECK(one_cycle_lr(0, total, cfg) == doctest::Approx(4e-4).epsilon(1e-12));
  CHECK(one_cycle_lr(300, total, cfg) == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(one_cycle_lr(total - 1, total, cfg) == doctest::Approx(1e-6).epsilon(1e-3));
  CHECK_THROWS_AS(one_cycle_lr(-1, total, cfg), ConfigError);
  CHECK_THROWS_AS(one_cycle_lr(total, total, cfg), ConfigError);
}

TEST_CASE("one-cycle schedule is continuous, positive and single-peaked") {
  OneCycleConfig cfg;
  const std::int64_t total = 500;
  double prev = one_cycle_lr(0, total, cfg);
  int direction_changes = 0;
  bool rising = true;
  for (std::int64_t s = 1; s < total; ++s) {
    const double lr = one_cycle_lr(s, total, cfg);
    CHECK(lr > 0.0);
    CHECK(std::abs(lr - prev) < 2e-4);  // no jumps at the phase boundary
    if (rising && lr < prev) {
      rising = false;
      ++direction_changes;
    } else if (!rising && lr > prev) {
      ++direction_changes;
    }
    prev = lr;
  }
  CHECK(direction_changes == 1);

  double peak = 0.0;
  for (std::int64_t s = 0; s < total; ++s)
    peak = std::max(peak, one_cycle_lr(s, total, cfg));
  CHECK(peak == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("adam with zero gradients is the identity on parameters") {
  ModelConfig config = ModelConfig::tiny();
  auto params = init_parameters<float>(config, 5, 0);
  auto state = AdamState<float>::init(params);
  auto before = params;

  params.zero_grad();
  adam_step(params, state, 0.01);
  CHECK(state.step == 1);
  for (std::size_t i = 0; i < params.entries.size(); ++i)
    CHECK(params.entries[i].value.data == before.entries[i].value.data);
}

TEST_CASE("first adam step with unit gradient moves by about -lr") {
  ParameterStore<double> params;
  params.add("theta", {1});
  params.entries[0].value.data[0] = 0.0;
  params.entries[0].grad.data[0] = 1.0;
  auto state = AdamState<double>::init(params);

  adam_step(params, state, 0.1);
  CHECK(params.entries[0].value.data[0] == doctest::Approx(-0.1).epsilon(1e-7));
}

TEST_CASE("adam drives a quadratic toward its minimum") {
  ParameterStore<double> params;
  params.add("theta", {1});
  params.entries[0].value.data[0] = 1.0;
  auto state = AdamState<double>::init(params);

  for (int step = 0; step < 100; ++step) {
    params.entries[0].grad.data[0] = 2.0 * params.entries[0].value.data[0];
    adam_step(params, state, 0.1);
  }
  CHECK(std::abs(params.entries[0].value.data[0]) < 0.1);
}

TEST_CASE("adam rejects non-finite gradients") {
  ParameterStore<double> params;
  params.add("theta", {1});
  params.entries[0].grad.data[0] = std::nan("");
  auto state = AdamState<double>::init(params);
  CHECK_THROWS_AS(adam_step(params, state, 0.1), NumericError);
}

namespace {

// Small featurized dataset straight from tensors; avoids file round trips.
FeaturizedDataset toy_dataset(int n, int frames, std::uint64_t seed) {
  FeaturizedDataset ds;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Tensor<float> x({kFeatureChannels, frames, 5});
    const int label = i % 2;
    for (auto& v : x.data)
      v = static_cast<float>(rng.uniform(-0.3, 0.3) + (label ? 0.6 : -0.6));
    ds.features.push_back(std::move(x));
    ds.labels.push_back(label);
    ds.ids.push_back("toy_" + std::to_string(i));
  }
  return ds;
}

}  // namespace

TEST_CASE("zero-epoch training returns the initialization") {
  SkeletonGraph graph = testutil::chain5();
  Partition partition = label_partitions(graph);
  FeaturizedDataset data = toy_dataset(8, 12, 3);

  TrainConfig tc;
  tc.epochs = 0;
  tc.seed = 99;
  TrainResult result = train_loop(data, data, partition, ModelConfig::tiny(), tc);
  CHECK(result.history.empty());

  auto init = init_parameters<float>(ModelConfig::tiny(), 5, 99);
  for (std::size_t i = 0; i < init.entries.size(); ++i)
    CHECK(result.params.entries[i].value.data == init.entries[i].value.data);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  SkeletonGraph graph = testutil::chain5();
  Partition partition = label_partitions(graph);
  FeaturizedDataset data = toy_dataset(12, 12, 5);

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.seed = 7;
  tc.threads = 1;

  TrainResult a = train_loop(data, data, partition, ModelConfig::tiny(), tc);
  TrainResult b = train_loop(data, data, partition, ModelConfig::tiny(), tc);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].mean_loss == b.history[e].mean_loss);
    CHECK(a.history[e].test_balanced_accuracy == b.history[e].test_balanced_accuracy);
  }
  for (std::size_t i = 0; i < a.params.entries.size(); ++i)
    CHECK(a.params.entries[i].value.data == b.params.entries[i].value.data);
}

TEST_CASE("thread count does not change training results") {
  SkeletonGraph graph = testutil::chain5();
  Partition partition = label_partitions(graph);
  FeaturizedDataset data = toy_dataset(12, 12, 11);

  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 6;
  tc.seed = 13;
  tc.threads = 1;
  TrainResult serial = train_loop(data, data, partition, ModelConfig::tiny(), tc);
  tc.threads = 2;
  TrainResult parallel = train_loop(data, data, partition, ModelConfig::tiny(), tc);

  for (std::size_t i = 0; i < serial.params.entries.size(); ++i)
    CHECK(serial.params.entries[i].value.data == parallel.params.entries[i].value.data);
}

TEST_CASE("an easy separable problem trains below the initial loss") {
  SkeletonGraph graph = testutil::chain5();
  Partition partition = label_partitions(graph);
  FeaturizedDataset data = toy_dataset(16, 12, 17);

  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.seed = 1;
  TrainResult result = train_loop(data, data, partition, ModelConfig::tiny(), tc);
  REQUIRE(result.history.size() == 3);
  CHECK(result.history.back().mean_loss < std::log(2.0));
  CHECK(result.history.back().test_balanced_accuracy > 0.5);
}

TEST_CASE("label spec binarizes full independence against everything else") {
  LabelSpec spec{"TubShower"};
  ManifestRow row;
  row.fim_score = 7;
  CHECK(spec.label_of(row) == 1);
  for (int score = 1; score <= 6; ++score) {
    row.fim_score = score;
    CHECK(spec.label_of(row) == 0);
  }
}
