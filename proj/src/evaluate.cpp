#include "fimnet/evaluate.hpp"

#include <algorithm>
#include <thread>

#include "fimnet/errors.hpp"

namespace fimnet {

int predict(const GraphConstants<float>& graph, const ModelConfig& config,
            const ParameterStore<float>& params, const Tensor<float>& features) {
  ad::Tape<float> tape;
  auto handles = forward(tape, graph, config, params, features);
  const auto& probs = tape.value(handles.probs);
  int best = 0;
  for (int k = 1; k < static_cast<int>(probs.numel()); ++k)
    if (probs.data[static_cast<std::size_t>(k)] > probs.data[static_cast<std::size_t>(best)])
      best = k;
  return best;
}

ConfusionMatrix evaluate_dataset(const GraphConstants<float>& graph, const ModelConfig& config,
                                 const ParameterStore<float>& params,
                                 const FeaturizedDataset& dataset, int threads) {
  std::vector<int> predictions(dataset.size(), 0);
  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < dataset.size(); i += step)
      predictions[i] = predict(graph, config, params, dataset.features[i]);
  };
  const int n_threads =
      std::max(1, std::min<int>(threads, static_cast<int>(dataset.size())));
  if (n_threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k)
      pool.emplace_back(worker, static_cast<std::size_t>(k), static_cast<std::size_t>(n_threads));
    for (auto& t : pool) t.join();
  }

  ConfusionMatrix cm(config.class_count);
  for (std::size_t i = 0; i < dataset.size(); ++i) cm.add(dataset.labels[i], predictions[i]);
  return cm;
}

AttentionMap export_attention(const GraphConstants<float>& graph, const ModelConfig& config,
                              const ParameterStore<float>& params, const Tensor<float>& features,
                              const std::vector<std::string>& joint_names,
                              std::string sequence_id) {
  if (!config.use_attention)
    throw DataError("attention export requires a checkpoint trained with attention enabled");
  ad::Tape<float> tape;
  auto handles = forward(tape, graph, config, params, features);
  Activations acts = extract_activations(tape, handles);
  return make_attention_map(acts.alpha, acts.beta, joint_names,
                            config.temporal_downsample(), std::move(sequence_id));
}

}  // namespace fimnet
