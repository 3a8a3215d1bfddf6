#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "intentrl/tape.hpp"

namespace intentrl {

// Binary parameter container; byte layout in docs/checkpoint-format.md.
struct Checkpoint {
  static constexpr char kMagic[8] = {'I', 'N', 'T', 'R', 'L', 'C', 'K', 'P'};
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t seed = 0;
  std::string config_digest;
  std::map<std::string, std::string> metadata;
  ParameterSet params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace intentrl
