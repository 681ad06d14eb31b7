#pragma once

#include "poselift/data/dataset.hpp"
#include "poselift/model.hpp"
#include "poselift/normalize.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace poselift {

// A trained model with everything inference needs.
struct Checkpoint {
  ModelConfig model;
  int clip_len = 8;
  std::vector<std::string> joint_names;
  NormStats stats;
  ParamSet params;

  bool operator==(const Checkpoint&) const = default;
};

inline constexpr char kCheckpointMagic[] = "PLIFT1";

// Layout: "PLIFT1", u64 LE manifest length, manifest JSON, u64 LE data length,
// then every tensor's values as little-endian float64 in row-major order, in
// manifest order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

}  // namespace poselift
