#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fimnet/errors.hpp"
#include "fimnet/evaluate.hpp"
#include "fimnet/metrics.hpp"
#include "fimnet/rng.hpp"
#include "test_helpers.hpp"

using namespace fimnet;

TEST_CASE("balanced accuracy frozen examples") {
  ConfusionMatrix cm(2);
  cm.counts = {1, 1, 0, 2};
  CHECK(balanced_accuracy(cm) == doctest::Approx(0.75));

  ConfusionMatrix diag(3);
  diag.counts = {4, 0, 0, 0, 2, 0, 0, 0, 9};
  CHECK(balanced_accuracy(diag) == doctest::Approx(1.0));

  ConfusionMatrix degenerate(2);
  degenerate.counts = {5, 0, 5, 0};  // everything predicted class 0
  CHECK(balanced_accuracy(degenerate) == doctest::Approx(0.5));

  ConfusionMatrix empty_row(2);
  empty_row.counts = {3, 1, 0, 0};
  CHECK_THROWS_AS(balanced_accuracy(empty_row), DataError);
}

TEST_CASE("balanced accuracy is invariant to duplicating every sample") {
  ConfusionMatrix cm(2);
  cm.counts = {7, 3, 2, 8};
  ConfusionMatrix doubled(2);
  for (std::size_t i = 0; i < cm.counts.size(); ++i) doubled.counts[i] = 2 * cm.counts[i];
  CHECK(balanced_accuracy(cm) == doctest::Approx(balanced_accuracy(doubled)).epsilon(1e-15));
}

TEST_CASE("balanced accuracy equals plain accuracy on balanced test sets") {
  ConfusionMatrix cm(2);
  cm.counts = {37, 13, 8, 42};  // 50 of each class
  const double plain = static_cast<double>(cm.at(0, 0) + cm.at(1, 1)) /
                       static_cast<double>(cm.total());
  CHECK(std::abs(balanced_accuracy(cm) - plain) < 1e-12);
}

TEST_CASE("seed aggregation frozen examples") {
  SeedAggregate constant = aggregate_seeds({0.7, 0.7, 0.7});
  CHECK(constant.mean == doctest::Approx(0.7));
  CHECK(constant.stddev == doctest::Approx(0.0));

  SeedAggregate pair = aggregate_seeds({0.6, 0.8});
  CHECK(pair.mean == doctest::Approx(0.7));
  CHECK(pair.stddev == doctest::Approx(std::sqrt(0.02)).epsilon(1e-9));  // ~0.1414

  SeedAggregate single = aggregate_seeds({0.42});
  CHECK(single.mean == doctest::Approx(0.42));
  CHECK(single.stddev == 0.0);

  CHECK_THROWS_AS(aggregate_seeds({}), DataError);
}

TEST_CASE("seed aggregation ignores run order") {
  SeedAggregate a = aggregate_seeds({0.5, 0.6, 0.9, 0.3});
  SeedAggregate b = aggregate_seeds({0.9, 0.3, 0.6, 0.5});
  CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-15));
  CHECK(a.stddev == doctest::Approx(b.stddev).epsilon(1e-15));
}

TEST_CASE("attention maps multiply spatial and temporal weights and sum to one") {
  const int t_out = 3, j_count = 4;
  Tensor<double> alpha({t_out, j_count});
  Tensor<double> beta({t_out});
  Rng rng(3);
  for (int t = 0; t < t_out; ++t) {
    double sum = 0.0;
    for (int j = 0; j < j_count; ++j) {
      alpha.at(t, j) = rng.uniform(0.1, 1.0);
      sum += alpha.at(t, j);
    }
    for (int j = 0; j < j_count; ++j) alpha.at(t, j) /= sum;
  }
  double bsum = 0.0;
  for (int t = 0; t < t_out; ++t) {
    beta.data[static_cast<std::size_t>(t)] = rng.uniform(0.1, 1.0);
    bsum += beta.data[static_cast<std::size_t>(t)];
  }
  for (double& b : beta.data) b /= bsum;

  std::vector<std::string> names = {"A", "B", "C", "D"};
  AttentionMap map = make_attention_map(alpha, beta, names, 4, "seq_x");
  double total = 0.0;
  for (double w : map.weights.data) {
    CHECK(w >= 0.0);
    total += w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(map.weights.at(1, 2) ==
        doctest::Approx(beta.data[1] * alpha.at(1, 2)).epsilon(1e-12));
}

TEST_CASE("uniform attention gives every cell 1/(T*J)") {
  const int t_out = 5, j_count = 2;
  Tensor<double> alpha({t_out, j_count}, 1.0 / j_count);
  Tensor<double> beta({t_out}, 1.0 / t_out);
  AttentionMap map = make_attention_map(alpha, beta, {"L", "R"}, 2, "uniform");
  for (double w : map.weights.data)
    CHECK(w == doctest::Approx(1.0 / (t_out * j_count)).epsilon(1e-12));
}

TEST_CASE("attention CSV has the documented shape") {
  Tensor<double> alpha({2, 2}, 0.5);
  Tensor<double> beta({2}, 0.5);
  AttentionMap map = make_attention_map(alpha, beta, {"SpineMid", "Head"}, 4, "demo");
  std::ostringstream out;
  write_attention_csv(out, map);
  const std::string text = out.str();
  CHECK(text.find("# sequence=demo temporal_downsample=4") == 0);
  CHECK(text.find("frame,joint,weight") != std::string::npos);
  CHECK(text.find("0,SpineMid,0.25") != std::string::npos);
  CHECK(text.find("1,Head,0.25") != std::string::npos);
}

TEST_CASE("attention export requires attention-enabled checkpoints") {
  SkeletonGraph graph = testutil::chain5();
  Partition partition = label_partitions(graph);
  auto constants = GraphConstants<float>::from(partition);
  ModelConfig config = ModelConfig::tiny();
  config.use_attention = false;
  auto params = init_parameters<float>(config, 5, 0);
  Tensor<float> features({kFeatureChannels, 12, 5});
  CHECK_THROWS_AS(export_attention(constants, config, params, features,
                                   {"a", "b", "c", "d", "e"}, "x"),
                  DataError);
}

TEST_CASE("metrics report serializes to JSON") {
  MetricsReport report;
  report.fim_item = "TubShower";
  report.action = "Squat";
  report.seed = 3;
  report.confusion = ConfusionMatrix(2);
  report.confusion.counts = {4, 1, 2, 5};
  report.classwise_acc = classwise_accuracy(report.confusion);
  report.balanced_acc = balanced_accuracy(report.confusion);
  const std::string text = report.to_json();
  CHECK(text.find("\"fim_item\": \"TubShower\"") != std::string::npos);
  CHECK(text.find("\"balanced_acc\"") != std::string::npos);
  CHECK(text.find("\"confusion\"") != std::string::npos);
}
