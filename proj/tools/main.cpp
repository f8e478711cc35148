#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fimnet/checkpoint.hpp"
#include "fimnet/data.hpp"
#include "fimnet/errors.hpp"
#include "fimnet/evaluate.hpp"
#include "fimnet/gradcheck.hpp"
#include "fimnet/ingest.hpp"
#include "fimnet/metrics.hpp"
#include "fimnet/synthgen.hpp"
#include "fimnet/trainloop.hpp"

namespace {

using fimnet::ConfigError;
using fimnet::DataError;
using fimnet::NumericError;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Applies values from a JSON config file to every option the user did not
// pass explicitly, so command-line flags win. Keys mirror the long option
// names without the leading dashes; unknown keys are rejected.
void apply_config_file(CLI::App* cmd, const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw ConfigError("config file must hold a JSON object");

  for (const auto& [key, value] : doc.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("unknown config key: " + key);
    if (opt->count() > 0) continue;  // explicit flag wins
    if (value.is_boolean()) {
      if (value.get<bool>()) opt->add_result("true");
    } else if (value.is_string()) {
      opt->add_result(value.get<std::string>());
    } else {
      opt->add_result(value.dump());
    }
  }
}

std::vector<fimnet::ManifestRow> load_filtered_manifest(const std::string& manifest_path,
                                                        const std::string& fim_item,
                                                        const std::string& action) {
  auto rows = fimnet::load_manifest(manifest_path);
  std::vector<fimnet::ManifestRow> kept;
  for (auto& row : rows) {
    if (!fim_item.empty() && row.fim_item != fim_item) continue;
    if (!action.empty() && row.action != action) continue;
    kept.push_back(std::move(row));
  }
  if (kept.empty()) throw DataError("no manifest rows match the requested item/action");
  return kept;
}

std::string dir_of(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

fimnet::FeatureMask parse_feature_mask(const std::string& features) {
  if (features == "coords") return fimnet::FeatureMask::coords_only();
  if (features == "coords+vel+ang") return fimnet::FeatureMask{};
  throw ConfigError("--features must be coords or coords+vel+ang");
}

std::vector<fimnet::BlockSpec> parse_blocks(const std::string& channels_csv) {
  std::vector<int> widths;
  std::stringstream ss(channels_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      widths.push_back(std::stoi(tok));
    } catch (...) {
      throw ConfigError("--block-channels must be a comma-separated integer list");
    }
  }
  if (widths.empty()) throw ConfigError("--block-channels must not be empty");
  std::vector<fimnet::BlockSpec> blocks;
  int in_ch = fimnet::kFeatureChannels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    blocks.push_back({in_ch, widths[i], i == 0 ? 1 : 2});
    in_ch = widths[i];
  }
  return blocks;
}

struct TrainFlags {
  std::string manifest;
  std::string fim_item;
  std::string action;
  std::uint64_t seed = 0;
  int epochs = 100;
  int batch_size = 32;
  double max_lr = 0.01;
  bool no_bilstm = false;
  bool no_attention = false;
  std::string features = "coords+vel+ang";
  std::string block_channels = "64,64,128";
  int lstm_hidden = 64;
  int attention_hidden = 64;
  double train_fraction = 0.8;
  bool vary_split = false;
  std::string out = "model.ckpt";
  std::string history;
  int threads = 1;
};

fimnet::ModelConfig model_config_from(const TrainFlags& flags) {
  fimnet::ModelConfig config;
  config.blocks = parse_blocks(flags.block_channels);
  config.lstm_hidden = flags.lstm_hidden;
  config.attention_hidden = flags.attention_hidden;
  config.use_bilstm = !flags.no_bilstm;
  config.use_attention = !flags.no_attention;
  config.feature_mask = parse_feature_mask(flags.features);
  config.validate();
  return config;
}

// One fixed split per dataset; --vary-split reshuffles it per seed instead.
std::uint64_t split_seed_of(const TrainFlags& flags) {
  return flags.vary_split ? flags.seed : 0x73706c6974ULL;
}

int cmd_train(const TrainFlags& flags) {
  auto rows = load_filtered_manifest(flags.manifest, flags.fim_item, flags.action);
  fimnet::LabelSpec label_spec{flags.fim_item.empty() ? rows.front().fim_item : flags.fim_item};

  const auto& skeleton = fimnet::default_skeleton();
  fimnet::FeaturizedDataset all = fimnet::featurize_manifest(
      rows, dir_of(flags.manifest), skeleton, label_spec, {}, flags.threads);

  fimnet::Split split =
      fimnet::stratified_split(all.labels, flags.train_fraction, split_seed_of(flags));
  fimnet::FeaturizedDataset train_set = fimnet::select(all, split.train);
  fimnet::FeaturizedDataset test_set = fimnet::select(all, split.test);

  fimnet::ModelConfig model_config = model_config_from(flags);
  fimnet::TrainConfig train_config;
  train_config.batch_size = flags.batch_size;
  train_config.epochs = flags.epochs;
  train_config.seed = flags.seed;
  train_config.schedule.max_lr = flags.max_lr;
  train_config.threads = flags.threads;

  fimnet::Partition partition = fimnet::label_partitions(skeleton);
  fimnet::TrainResult result =
      fimnet::train_loop(train_set, test_set, partition, model_config, train_config);

  fimnet::Checkpoint ckpt{model_config, skeleton.node_count, result.params};
  fimnet::save_checkpoint_file(flags.out, ckpt);
  if (!flags.history.empty()) {
    std::ofstream hist(flags.history);
    if (!hist) throw DataError("cannot write history file: " + flags.history);
    hist << fimnet::history_to_json(result.history) << '\n';
  }

  if (result.aborted) {
    std::cerr << "training aborted: " << result.abort_reason
              << " (last-good checkpoint written to " << flags.out << ")\n";
    throw NumericError(result.abort_reason);
  }
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "trained " << flags.epochs << " epochs; final loss " << last.mean_loss
              << ", test balanced accuracy " << last.test_balanced_accuracy << '\n';
  }
  std::cout << "checkpoint written to " << flags.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeletal-motion independence classifier"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "emit errors as machine-readable JSON");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  fimnet::SynthConfig synth_cfg;
  std::string synth_out = "synth_data";
  std::string synth_signal_joints;
  std::string synth_config_path;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--n", synth_cfg.n_sequences, "number of sequences");
  synth->add_option("--seed", synth_cfg.seed, "generator seed");
  synth->add_option("--balance", synth_cfg.class_balance, "fraction of class 1");
  synth->add_option("--amplitude-gap", synth_cfg.amplitude_gap, "class separation in [0,1]");
  synth->add_option("--noise-std", synth_cfg.noise_std, "coordinate noise sigma (m)");
  synth->add_option("--missing-rate", synth_cfg.missing_rate, "frame drop probability");
  synth->add_option("--outlier-rate", synth_cfg.outlier_rate, "spike probability");
  synth->add_option("--frames", synth_cfg.frames, "frames per sequence");
  synth->add_option("--signal-joints", synth_signal_joints,
                    "comma-separated joint names carrying the class signal");
  synth->add_option("--fim-item", synth_cfg.fim_item, "manifest fim_item value");
  synth->add_option("--action", synth_cfg.action, "manifest action value");
  synth->add_option("--config", synth_config_path, "JSON config file");

  // ---- preprocess ----
  auto* pre = app.add_subcommand("preprocess", "clean a raw sequence file");
  std::string pre_input, pre_output, pre_features_out, pre_config_path;
  int pre_median = fimnet::kDefaultFilterWindow;
  int pre_average = fimnet::kDefaultFilterWindow;
  int pre_length = fimnet::kSegmentLength;
  pre->add_option("--input", pre_input, "raw sequence JSONL")->required();
  pre->add_option("--output", pre_output, "cleaned sequence JSONL");
  pre->add_option("--features-out", pre_features_out, "binary feature dump");
  pre->add_option("--median-window", pre_median, "median filter window (odd)");
  pre->add_option("--average-window", pre_average, "moving average window (odd)");
  pre->add_option("--length", pre_length, "segment length");
  pre->add_option("--config", pre_config_path, "JSON config file");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model from a manifest");
  TrainFlags tf;
  std::string train_config_path;
  train->add_option("--manifest", tf.manifest, "dataset manifest CSV")->required();
  train->add_option("--fim-item", tf.fim_item, "restrict to one fim_item");
  train->add_option("--action", tf.action, "restrict to one action");
  train->add_option("--seed", tf.seed, "initialization seed");
  train->add_option("--epochs", tf.epochs, "training epochs");
  train->add_option("--batch-size", tf.batch_size, "mini-batch size");
  train->add_option("--max-lr", tf.max_lr, "one-cycle peak learning rate");
  train->add_flag("--no-bilstm", tf.no_bilstm, "disable the BiLSTM stage");
  train->add_flag("--no-attention", tf.no_attention, "disable attention pooling");
  train->add_option("--features", tf.features, "coords or coords+vel+ang");
  train->add_option("--block-channels", tf.block_channels, "backbone widths, e.g. 64,64,128");
  train->add_option("--lstm-hidden", tf.lstm_hidden, "per-direction LSTM width");
  train->add_option("--attention-hidden", tf.attention_hidden, "attention MLP width");
  train->add_option("--train-fraction", tf.train_fraction, "train split fraction");
  train->add_flag("--vary-split", tf.vary_split, "reshuffle the split with --seed");
  train->add_option("--out", tf.out, "checkpoint path");
  train->add_option("--history", tf.history, "per-epoch history JSON path");
  train->add_option("--threads", tf.threads, "worker threads");
  train->add_option("--config", train_config_path, "JSON config file");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
  std::string eval_ckpt, eval_manifest, eval_item, eval_action, eval_out, eval_config_path;
  std::uint64_t eval_seed = 0;
  int eval_threads = 1;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest CSV")->required();
  eval_cmd->add_option("--fim-item", eval_item, "restrict to one fim_item");
  eval_cmd->add_option("--action", eval_action, "restrict to one action");
  eval_cmd->add_option("--seed", eval_seed, "seed recorded in the report");
  eval_cmd->add_option("--out", eval_out, "write the JSON report here");
  eval_cmd->add_option("--threads", eval_threads, "worker threads");
  eval_cmd->add_option("--config", eval_config_path, "JSON config file");

  // ---- gradcheck ----
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  double gc_epsilon = 1e-4, gc_tolerance = 1e-3;
  int gc_per_group = 20;
  std::uint64_t gc_seed = 0;
  std::string gc_config_path;
  gc->add_option("--epsilon", gc_epsilon, "central difference step");
  gc->add_option("--tolerance", gc_tolerance, "max relative error allowed");
  gc->add_option("--per-group", gc_per_group, "coordinates sampled per group");
  gc->add_option("--seed", gc_seed, "sampling seed");
  gc->add_option("--config", gc_config_path, "JSON config file");

  // ---- attention ----
  auto* attn = app.add_subcommand("attention", "export attention weights for a sequence");
  std::string attn_ckpt, attn_input, attn_out, attn_config_path;
  attn->add_option("--checkpoint", attn_ckpt, "model checkpoint")->required();
  attn->add_option("--input", attn_input, "raw sequence JSONL")->required();
  attn->add_option("--out", attn_out, "attention CSV path")->required();
  attn->add_option("--config", attn_config_path, "JSON config file");

  // ---- ablation ----
  auto* abl = app.add_subcommand("ablation", "run the four-row component ablation");
  std::string abl_manifest, abl_item, abl_action, abl_out, abl_config_path;
  int abl_seeds = 5, abl_epochs = 10, abl_batch = 32, abl_threads = 1;
  double abl_max_lr = 0.01;
  std::string abl_channels = "64,64,128";
  int abl_lstm_hidden = 64, abl_attention_hidden = 64;
  abl->add_option("--manifest", abl_manifest, "dataset manifest CSV")->required();
  abl->add_option("--fim-item", abl_item, "restrict to one fim_item");
  abl->add_option("--action", abl_action, "restrict to one action");
  abl->add_option("--seeds", abl_seeds, "number of seeds per row");
  abl->add_option("--epochs", abl_epochs, "epochs per run");
  abl->add_option("--batch-size", abl_batch, "mini-batch size");
  abl->add_option("--max-lr", abl_max_lr, "one-cycle peak learning rate");
  abl->add_option("--block-channels", abl_channels, "backbone widths");
  abl->add_option("--lstm-hidden", abl_lstm_hidden, "per-direction LSTM width");
  abl->add_option("--attention-hidden", abl_attention_hidden, "attention MLP width");
  abl->add_option("--threads", abl_threads, "worker threads");
  abl->add_option("--out", abl_out, "write the JSON report here");
  abl->add_option("--config", abl_config_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (json_errors) {
      nlohmann::json err{{"error", "usage"}, {"message", e.what()}};
      std::cerr << err.dump() << '\n';
      return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (!synth_config_path.empty()) apply_config_file(synth, synth_config_path);
      if (!synth_signal_joints.empty()) {
        synth_cfg.signal_joints.clear();
        std::stringstream ss(synth_signal_joints);
        std::string name;
        while (std::getline(ss, name, ',')) {
          auto id = fimnet::joint_from_name(name);
          if (!id) throw fimnet::UnknownJointError(name);
          synth_cfg.signal_joints.push_back(*id);
        }
      }
      const std::string manifest = fimnet::write_dataset(synth_cfg, synth_out);
      std::cout << "wrote " << synth_cfg.n_sequences << " sequences; manifest at " << manifest
                << '\n';
      return kExitOk;
    }

    if (pre->parsed()) {
      if (!pre_config_path.empty()) apply_config_file(pre, pre_config_path);
      fimnet::RawSequence raw = fimnet::parse_sequence_file(pre_input);
      fimnet::CleaningOptions options{pre_median, pre_average, pre_length};
      fimnet::CleanSequence clean = fimnet::clean_pipeline(raw, options);

      if (!pre_output.empty()) {
        fimnet::RawSequence cleaned_out;
        cleaned_out.kind = fimnet::SkeletonKind::Pruned17;
        cleaned_out.frame_rate = 1.0 / clean.frame_interval;
        for (int t = 0; t < clean.frame_count; ++t) {
          fimnet::RawFrame frame;
          frame.index = t;
          frame.joints.resize(static_cast<std::size_t>(clean.joint_count));
          for (int j = 0; j < clean.joint_count; ++j)
            frame.joints[static_cast<std::size_t>(j)] =
                fimnet::Vec3{clean.at(t, j, 0), clean.at(t, j, 1), clean.at(t, j, 2)};
          cleaned_out.frames.push_back(std::move(frame));
        }
        std::ofstream out(pre_output);
        if (!out) throw DataError("cannot write cleaned sequence: " + pre_output);
        fimnet::write_sequence(out, cleaned_out);
      }
      if (!pre_features_out.empty()) {
        fimnet::FeatureTensor feats = fimnet::assemble(clean, fimnet::default_skeleton());
        fimnet::dump_features_file(pre_features_out, feats);
      }
      std::cout << "cleaned " << clean.frame_count << " frames x " << clean.joint_count
                << " joints\n";
      return kExitOk;
    }

    if (train->parsed()) {
      if (!train_config_path.empty()) apply_config_file(train, train_config_path);
      return cmd_train(tf);
    }

    if (eval_cmd->parsed()) {
      if (!eval_config_path.empty()) apply_config_file(eval_cmd, eval_config_path);
      fimnet::Checkpoint ckpt = fimnet::load_checkpoint_file(eval_ckpt);
      auto rows = load_filtered_manifest(eval_manifest, eval_item, eval_action);
      fimnet::LabelSpec label_spec{eval_item.empty() ? rows.front().fim_item : eval_item};
      const auto& skeleton = fimnet::default_skeleton();
      fimnet::FeaturizedDataset data = fimnet::featurize_manifest(
          rows, dir_of(eval_manifest), skeleton, label_spec, {}, eval_threads);
      fimnet::Partition partition = fimnet::label_partitions(skeleton);
      auto graph = fimnet::GraphConstants<float>::from(partition);
      fimnet::ConfusionMatrix cm =
          fimnet::evaluate_dataset(graph, ckpt.config, ckpt.params, data, eval_threads);

      fimnet::MetricsReport report;
      report.fim_item = label_spec.fim_item;
      report.action = eval_action;
      report.seed = eval_seed;
      report.confusion = cm;
      report.classwise_acc = fimnet::classwise_accuracy(cm);
      report.balanced_acc = fimnet::balanced_accuracy(cm);
      const std::string text = report.to_json();
      if (!eval_out.empty()) {
        std::ofstream out(eval_out);
        if (!out) throw DataError("cannot write report: " + eval_out);
        out << text << '\n';
      }
      std::cout << text << '\n';
      return kExitOk;
    }

    if (gc->parsed()) {
      if (!gc_config_path.empty()) apply_config_file(gc, gc_config_path);
      // 5-joint chain, 12 frames: small enough to finish in seconds.
      std::vector<fimnet::Vec3> pose = {{0, 0, 0}, {0, 0.3, 0}, {0, 0.65, 0},
                                        {0, 1.05, 0}, {0, 1.5, 0}};
      fimnet::SkeletonGraph chain =
          fimnet::build_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, 2, pose);
      fimnet::Partition partition = fimnet::label_partitions(chain);
      auto graph = fimnet::GraphConstants<double>::from(partition);

      fimnet::ModelConfig config = fimnet::ModelConfig::tiny();
      auto params = fimnet::generic_check_parameters(config, 5, gc_seed);
      fimnet::Tensor<double> input =
          fimnet::generic_check_input(graph, config, params, 12, gc_seed);

      fimnet::GradReport report = fimnet::finite_difference_check(
          graph, config, params, input, 1, gc_epsilon, gc_tolerance, gc_per_group, gc_seed);
      std::cout << report.to_json() << '\n';
      if (!report.pass) throw NumericError("gradient check failed");
      return kExitOk;
    }

    if (attn->parsed()) {
      if (!attn_config_path.empty()) apply_config_file(attn, attn_config_path);
      fimnet::Checkpoint ckpt = fimnet::load_checkpoint_file(attn_ckpt);
      fimnet::RawSequence raw = fimnet::parse_sequence_file(attn_input);
      fimnet::CleanSequence clean = fimnet::clean_pipeline(raw);
      const auto& skeleton = fimnet::default_skeleton();
      fimnet::FeatureTensor feats = fimnet::assemble(clean, skeleton);
      fimnet::Partition partition = fimnet::label_partitions(skeleton);
      auto graph = fimnet::GraphConstants<float>::from(partition);
      fimnet::AttentionMap map = fimnet::export_attention(
          graph, ckpt.config, ckpt.params, feats.values.cast<float>(), fimnet::joint_names(),
          std::filesystem::path(attn_input).filename().string());
      std::ofstream out(attn_out);
      if (!out) throw DataError("cannot write attention CSV: " + attn_out);
      fimnet::write_attention_csv(out, map);
      std::cout << "attention map written to " << attn_out << '\n';
      return kExitOk;
    }

    if (abl->parsed()) {
      if (!abl_config_path.empty()) apply_config_file(abl, abl_config_path);
      auto rows = load_filtered_manifest(abl_manifest, abl_item, abl_action);
      fimnet::LabelSpec label_spec{abl_item.empty() ? rows.front().fim_item : abl_item};
      const auto& skeleton = fimnet::default_skeleton();
      fimnet::FeaturizedDataset all = fimnet::featurize_manifest(
          rows, dir_of(abl_manifest), skeleton, label_spec, {}, abl_threads);
      fimnet::Split split = fimnet::stratified_split(all.labels, 0.8, 0x73706c6974ULL);
      fimnet::FeaturizedDataset train_set = fimnet::select(all, split.train);
      fimnet::FeaturizedDataset test_set = fimnet::select(all, split.test);
      fimnet::Partition partition = fimnet::label_partitions(skeleton);

      struct RowSpec {
        const char* name;
        bool velang;
        bool bilstm;
        bool attention;
      };
      const RowSpec specs[4] = {{"coords", false, false, false},
                                {"coords+vel/ang", true, false, false},
                                {"coords+vel/ang+bilstm", true, true, false},
                                {"coords+vel/ang+bilstm+attention", true, true, true}};

      nlohmann::json table = nlohmann::json::array();
      double baseline_mean = 0.0;
      std::printf("%-34s %8s %8s %8s\n", "configuration", "mean", "std", "gain");
      for (int row = 0; row < 4; ++row) {
        fimnet::ModelConfig config;
        config.blocks = parse_blocks(abl_channels);
        config.lstm_hidden = abl_lstm_hidden;
        config.attention_hidden = abl_attention_hidden;
        config.use_bilstm = specs[row].bilstm;
        config.use_attention = specs[row].attention;
        config.feature_mask =
            specs[row].velang ? fimnet::FeatureMask{} : fimnet::FeatureMask::coords_only();

        std::vector<double> accuracies;
        for (int seed = 0; seed < abl_seeds; ++seed) {
          fimnet::TrainConfig tc;
          tc.batch_size = abl_batch;
          tc.epochs = abl_epochs;
          tc.seed = static_cast<std::uint64_t>(seed);
          tc.schedule.max_lr = abl_max_lr;
          tc.threads = abl_threads;
          fimnet::TrainResult res =
              fimnet::train_loop(train_set, test_set, partition, config, tc);
          if (res.aborted) throw NumericError("ablation run aborted: " + res.abort_reason);
          accuracies.push_back(res.history.back().test_balanced_accuracy);
        }
        fimnet::SeedAggregate agg = fimnet::aggregate_seeds(accuracies);
        if (row == 0) baseline_mean = agg.mean;
        const double gain = (agg.mean - baseline_mean) * 100.0;
        std::printf("%-34s %8.4f %8.4f %+8.2f\n", specs[row].name, agg.mean, agg.stddev, gain);
        table.push_back({{"configuration", specs[row].name},
                         {"mean_balanced_acc", agg.mean},
                         {"std", agg.stddev},
                         {"gain", gain},
                         {"n_seeds", abl_seeds}});
      }
      if (!abl_out.empty()) {
        std::ofstream out(abl_out);
        if (!out) throw DataError("cannot write ablation report: " + abl_out);
        out << table.dump(2) << '\n';
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    if (json_errors)
      std::cerr << nlohmann::json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    else
      std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    if (json_errors)
      std::cerr << nlohmann::json{{"error", "data"}, {"message", e.what()}}.dump() << '\n';
    else
      std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    if (json_errors)
      std::cerr << nlohmann::json{{"error", "numeric"}, {"message", e.what()}}.dump() << '\n';
    else
      std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
