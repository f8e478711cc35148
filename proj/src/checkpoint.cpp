#include "fimnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "fimnet/errors.hpp"

namespace fimnet {

namespace {

constexpr char kMagic[8] = {'F', 'I', 'M', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : c.blocks)
    j["blocks"].push_back({b.in_channels, b.out_channels, b.temporal_stride});
  j["temporal_kernel"] = c.temporal_kernel;
  j["lstm_hidden"] = c.lstm_hidden;
  j["attention_hidden"] = c.attention_hidden;
  j["class_count"] = c.class_count;
  j["use_bilstm"] = c.use_bilstm;
  j["use_attention"] = c.use_attention;
  j["feature_mask"] = {{"coordinates", c.feature_mask.coordinates},
                       {"velocity", c.feature_mask.velocity},
                       {"angle", c.feature_mask.angle}};
  return j;
}

ModelConfig config_from(const nlohmann::json& j) {
  ModelConfig c;
  c.blocks.clear();
  for (const auto& b : j.at("blocks"))
    c.blocks.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>()});
  c.temporal_kernel = j.at("temporal_kernel").get<int>();
  c.lstm_hidden = j.at("lstm_hidden").get<int>();
  c.attention_hidden = j.at("attention_hidden").get<int>();
  c.class_count = j.at("class_count").get<int>();
  c.use_bilstm = j.at("use_bilstm").get<bool>();
  c.use_attention = j.at("use_attention").get<bool>();
  const auto& m = j.at("feature_mask");
  c.feature_mask.coordinates = m.at("coordinates").get<bool>();
  c.feature_mask.velocity = m.at("velocity").get<bool>();
  c.feature_mask.angle = m.at("angle").get<bool>();
  c.validate();
  return c;
}

}  // namespace

void to_json_config(const ModelConfig& config, std::string& out) {
  out = config_to_json(config).dump();
}

ModelConfig config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("invalid model config JSON");
  return config_from(j);
}

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, 8);
  write_u32(out, kVersion);

  nlohmann::json j = config_to_json(ckpt.config);
  j["joint_count"] = ckpt.joint_count;
  const std::string config_text = j.dump();
  write_u32(out, static_cast<std::uint32_t>(config_text.size()));
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));

  write_u32(out, static_cast<std::uint32_t>(ckpt.params.entries.size()));
  for (const auto& e : ckpt.params.entries) {
    write_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_u32(out, static_cast<std::uint32_t>(e.value.shape.size()));
    for (int d : e.value.shape) write_u32(out, static_cast<std::uint32_t>(d));
    for (float v : e.value.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      write_u32(out, bits);
    }
  }
  if (!out) throw DataError("checkpoint write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("not a checkpoint file (bad magic)");
  const std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));

  const std::uint32_t config_len = read_u32(in);
  std::string config_text(config_len, '\0');
  if (!in.read(config_text.data(), config_len)) throw DataError("checkpoint truncated");
  nlohmann::json j = nlohmann::json::parse(config_text, nullptr, false);
  if (j.is_discarded()) throw DataError("checkpoint config block is not valid JSON");

  Checkpoint ckpt;
  ckpt.config = config_from(j);
  ckpt.joint_count = j.at("joint_count").get<int>();

  // Reference layout for shape validation; values are overwritten below.
  ckpt.params = init_parameters<float>(ckpt.config, ckpt.joint_count, 0);

  const std::uint32_t group_count = read_u32(in);
  if (group_count != ckpt.params.entries.size())
    throw DataError("checkpoint group count does not match config");
  for (std::uint32_t gi = 0; gi < group_count; ++gi) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint truncated");
    auto it = ckpt.params.index.find(name);
    if (it == ckpt.params.index.end())
      throw DataError("checkpoint has unexpected parameter group: " + name);
    auto& entry = ckpt.params.entries[static_cast<std::size_t>(it->second)];

    const std::uint32_t ndim = read_u32(in);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_u32(in));
    if (shape != entry.value.shape)
      throw DataError("checkpoint shape mismatch for group " + name);
    for (float& v : entry.value.data) {
      const std::uint32_t bits = read_u32(in);
      std::memcpy(&v, &bits, 4);
    }
  }
  return ckpt;
}

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace fimnet
