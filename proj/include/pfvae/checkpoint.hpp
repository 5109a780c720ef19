#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pfvae/config.hpp"
#include "pfvae/tensor.hpp"

namespace pfvae {

// Binary training snapshot. Layout (integers and f64 payloads little-endian):
//   "PFVAECKP" | u32 version | u32 len + config text |
//   u32 n + n tensor records (parameters, insertion order) |
//   u32 n + n tensor records (optimizer moments, "m.<name>" then "v.<name>") |
//   u64 optimizer step count | u64 iteration | u32 len + rng state text
// Tensor record: u32 name len | name bytes | u32 rank | rank x u32 dims |
// f64 row-major data. save(load(p)) is byte-identical to the original file.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  RunConfig config;
  std::vector<std::pair<std::string, Tensor>> params;
  std::vector<std::pair<std::string, Tensor>> opt_moments;
  std::uint64_t opt_steps = 0;
  std::uint64_t iteration = 0;
  std::string rng_state;

  // Writes to a temp file then renames, so a crash never corrupts an
  // existing checkpoint at this path.
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace pfvae
