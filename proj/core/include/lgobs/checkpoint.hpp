#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lgobs/nn.hpp"

namespace lgobs {

/// Model checkpoint: parameters plus optimizer state. Byte layout in README.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  ObserverParams params;
  OptimizerState optimizer;
  std::uint64_t iteration = 0;  // completed training passes
  std::string rng_state;        // textual std::mt19937_64 state, may be empty
};

/// Atomic: writes a temporary file and renames it into place.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace lgobs
