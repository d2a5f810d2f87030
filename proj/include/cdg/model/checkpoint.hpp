#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdg/model/config.hpp"
#include "cdg/model/parameters.hpp"

namespace cdg {

// On-disk layout:
//   bytes 0..7    magic "CDGCKPT\0"
//   bytes 8..11   format version, u32 little-endian
//   bytes 12..19  header length H, u64 little-endian
//   next H bytes  UTF-8 JSON header
//   remainder     tensor payload, IEEE-754 doubles little-endian
// The header carries config, vocabulary, conditions, step, metadata and a
// tensor directory of {name, shape, offset} where offset counts doubles from
// the start of the payload. Optimizer moments are stored as ordinary tensors
// under the "adam.m." and "adam.v." prefixes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::vector<std::string> vocabulary;  // token strings in id order
  std::vector<std::string> conditions;  // condition labels in id order
  std::uint64_t step = 0;
  nlohmann::json metadata = nlohmann::json::object();
  ParameterSet parameters;
  std::vector<std::pair<std::string, Tensor>> optimizer_state;
};

// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Loaded parameters have requires_grad set. Throws IoError on a malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cdg
