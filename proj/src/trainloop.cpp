#include "fimnet/trainloop.hpp"

#include <cmath>
#include <thread>

#include <json.hpp>

#include "fimnet/errors.hpp"
#include "fimnet/evaluate.hpp"

namespace fimnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epoch count must be >= 0");
  if (!(schedule.max_lr > 0.0)) throw ConfigError("max_lr must be positive");
  if (!(schedule.warmup_fraction > 0.0 && schedule.warmup_fraction < 1.0))
    throw ConfigError("warmup fraction must be in (0,1)");
  if (threads < 1) throw ConfigError("thread count must be >= 1");
}

namespace {

struct BatchResult {
  double loss_sum = 0.0;
};

// Per-sample forward/backward; gradients land in per-sample buffers that the
// caller reduces in index order.
BatchResult run_batch(const GraphConstants<float>& graph, const ModelConfig& config,
                      ParameterStore<float>& params,
                      const FeaturizedDataset& data,
                      const std::vector<std::size_t>& batch_indices, int threads,
                      std::vector<ParameterStore<float>>& scratch) {
  const std::size_t batch = batch_indices.size();
  while (scratch.size() < batch) scratch.push_back(params);  // shape templates
  std::vector<double> losses(batch, 0.0);
  std::vector<std::string> failures(batch);

  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t s = begin; s < batch; s += step) {
      try {
        auto& grads = scratch[s];
        grads.zero_grad();
        ad::Tape<float> tape;
        auto leaves = bind_parameters(tape, params);
        auto handles = forward_bound(tape, graph, config, leaves, params,
                                     data.features[batch_indices[s]],
                                     data.labels[batch_indices[s]]);
        const double loss = static_cast<double>(tape.value(handles.loss).data[0]);
        if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
        tape.backward(handles.loss);
        accumulate_gradients(tape, leaves, grads, 1.0f);
        losses[s] = loss;
      } catch (const std::exception& e) {
        failures[s] = e.what();
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(batch)));
  if (n_threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k)
      pool.emplace_back(worker, static_cast<std::size_t>(k), static_cast<std::size_t>(n_threads));
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (!f.empty()) throw NumericError(f);

  // Mean gradient over the batch, reduced in sample order.
  params.zero_grad();
  const float inv_batch = 1.0f / static_cast<float>(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t gi = 0; gi < params.entries.size(); ++gi) {
      auto& dst = params.entries[gi].grad;
      const auto& src = scratch[s].entries[gi].grad;
      for (std::size_t i = 0; i < dst.data.size(); ++i)
        dst.data[i] += src.data[i] * inv_batch;
    }
  }

  BatchResult result;
  for (double l : losses) result.loss_sum += l;
  return result;
}

}  // namespace

TrainResult train_loop(const FeaturizedDataset& train_set, const FeaturizedDataset& test_set,
                       const Partition& partition, const ModelConfig& model_config,
                       const TrainConfig& train_config) {
  model_config.validate();
  train_config.validate();
  if (train_set.size() == 0) throw DataError("empty training set");

  const int j_count = partition.node_count;
  auto graph = GraphConstants<float>::from(partition);

  TrainResult result;
  result.params = init_parameters<float>(model_config, j_count, train_config.seed);

  if (train_config.epochs == 0) return result;

  WeightedSampler sampler(train_set.labels, train_config.seed);
  AdamState<float> adam = AdamState<float>::init(result.params);

  const std::size_t epoch_len = sampler.epoch_length();
  const std::int64_t batches_per_epoch =
      static_cast<std::int64_t>((epoch_len + train_config.batch_size - 1) /
                                static_cast<std::size_t>(train_config.batch_size));
  const std::int64_t total_steps = batches_per_epoch * train_config.epochs;

  ParameterStore<float> last_good = result.params;
  std::vector<ParameterStore<float>> scratch;
  std::int64_t global_step = 0;

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    double epoch_loss_sum = 0.0;
    double lr_last = 0.0;
    try {
      std::vector<std::size_t> order(epoch_len);
      for (auto& idx : order) idx = sampler.next();

      for (std::size_t start = 0; start < epoch_len;
           start += static_cast<std::size_t>(train_config.batch_size)) {
        const std::size_t end =
            std::min(epoch_len, start + static_cast<std::size_t>(train_config.batch_size));
        std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
        BatchResult br = run_batch(graph, model_config, result.params, train_set, batch,
                                   train_config.threads, scratch);
        epoch_loss_sum += br.loss_sum;
        lr_last = one_cycle_lr(global_step, total_steps, train_config.schedule);
        adam_step(result.params, adam, lr_last, train_config.adam);
        ++global_step;
      }
    } catch (const NumericError& e) {
      result.params = last_good;
      result.aborted = true;
      result.abort_reason = e.what();
      return result;
    }

    EpochRecord record;
    record.epoch = epoch + 1;
    record.mean_loss = epoch_loss_sum / static_cast<double>(epoch_len);
    record.lr_last = lr_last;
    if (test_set.size() > 0) {
      ConfusionMatrix cm = evaluate_dataset(graph, model_config, result.params, test_set,
                                            train_config.threads);
      record.test_balanced_accuracy = balanced_accuracy(cm);
    }
    result.history.push_back(record);
    last_good = result.params;
  }
  return result;
}

std::string history_to_json(const std::vector<EpochRecord>& history) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : history) {
    arr.push_back({{"epoch", r.epoch},
                   {"mean_loss", r.mean_loss},
                   {"lr_last", r.lr_last},
                   {"test_balanced_accuracy", r.test_balanced_accuracy}});
  }
  return arr.dump(2);
}

}  // namespace fimnet
