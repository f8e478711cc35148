#pragma once

#include "fimnet/data.hpp"
#include "fimnet/metrics.hpp"
#include "fimnet/model.hpp"
#include "fimnet/partition.hpp"

namespace fimnet {

// Argmax class of a single [9 x T x J] feature tensor.
int predict(const GraphConstants<float>& graph, const ModelConfig& config,
            const ParameterStore<float>& params, const Tensor<float>& features);

ConfusionMatrix evaluate_dataset(const GraphConstants<float>& graph, const ModelConfig& config,
                                 const ParameterStore<float>& params,
                                 const FeaturizedDataset& dataset, int threads = 1);

// Attention saliency for one sequence; requires a model trained with
// attention enabled.
AttentionMap export_attention(const GraphConstants<float>& graph, const ModelConfig& config,
                              const ParameterStore<float>& params, const Tensor<float>& features,
                              const std::vector<std::string>& joint_names,
                              std::string sequence_id);

}  // namespace fimnet
