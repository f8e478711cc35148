#pragma once

#include <iosfwd>
#include <string>

#include "fimnet/model.hpp"

namespace fimnet {

struct Checkpoint {
  ModelConfig config;
  int joint_count = kJointCount;
  ParameterStore<float> params;
};

// Binary layout: 8-byte magic "FIMNETCK", u32 version, u32 length-prefixed
// JSON config block, then named parameter groups as little-endian float32
// blobs in declaration order. Loading validates every shape against the
// config.
void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace fimnet
