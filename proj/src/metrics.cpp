#include "fimnet/metrics.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "fimnet/errors.hpp"

namespace fimnet {

std::vector<double> classwise_accuracy(const ConfusionMatrix& cm) {
  std::vector<double> recall(static_cast<std::size_t>(cm.class_count), 0.0);
  for (int k = 0; k < cm.class_count; ++k) {
    std::int64_t row = 0;
    for (int j = 0; j < cm.class_count; ++j) row += cm.at(k, j);
    if (row == 0) throw DataError("confusion matrix has an empty true-class row");
    recall[static_cast<std::size_t>(k)] =
        static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
  }
  return recall;
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  const auto recall = classwise_accuracy(cm);
  double sum = 0.0;
  for (double r : recall) sum += r;
  return sum / static_cast<double>(recall.size());
}

SeedAggregate aggregate_seeds(const std::vector<double>& values) {
  if (values.empty()) throw DataError("cannot aggregate an empty run list");
  SeedAggregate agg;
  agg.n = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  agg.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
    agg.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return agg;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["fim_item"] = fim_item;
  j["action"] = action;
  j["seed"] = seed;
  nlohmann::json rows = nlohmann::json::array();
  for (int truth = 0; truth < confusion.class_count; ++truth) {
    nlohmann::json row = nlohmann::json::array();
    for (int pred = 0; pred < confusion.class_count; ++pred)
      row.push_back(confusion.at(truth, pred));
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  j["classwise_acc"] = classwise_acc;
  j["balanced_acc"] = balanced_acc;
  return j.dump(2);
}

AttentionMap make_attention_map(const Tensor<double>& alpha, const Tensor<double>& beta,
                                const std::vector<std::string>& joint_names,
                                int temporal_downsample, std::string sequence_id) {
  if (alpha.ndim() != 2) throw DataError("alpha must be [T_out x J]");
  const int t_out = alpha.dim(0);
  const int j_count = alpha.dim(1);
  if (beta.numel() != t_out) throw DataError("beta length does not match alpha");
  if (static_cast<int>(joint_names.size()) != j_count)
    throw DataError("joint name count does not match alpha");

  AttentionMap map;
  map.weights = Tensor<double>({t_out, j_count});
  for (int t = 0; t < t_out; ++t)
    for (int j = 0; j < j_count; ++j)
      map.weights.at(t, j) = beta.data[static_cast<std::size_t>(t)] * alpha.at(t, j);
  map.sequence_id = std::move(sequence_id);
  map.joint_names = joint_names;
  map.temporal_downsample = temporal_downsample;
  return map;
}

void write_attention_csv(std::ostream& out, const AttentionMap& map) {
  out << "# sequence=" << map.sequence_id
      << " temporal_downsample=" << map.temporal_downsample << '\n';
  out << "frame,joint,weight\n";
  const int t_out = map.weights.dim(0);
  const int j_count = map.weights.dim(1);
  char buf[64];
  for (int t = 0; t < t_out; ++t) {
    for (int j = 0; j < j_count; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", map.weights.at(t, j));
      out << t << ',' << map.joint_names[static_cast<std::size_t>(j)] << ',' << buf << '\n';
    }
  }
}

}  // namespace fimnet
