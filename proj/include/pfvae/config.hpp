#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pfvae/nets.hpp"

namespace pfvae {

// Flat run configuration. Every field maps 1:1 onto a `key = value` line in a
// config file and onto a CLI flag of the same name. Precedence when building
// a run: defaults < config file < --profile < explicit CLI flags.
struct RunConfig {
  std::size_t input_dim = 784;
  std::vector<std::size_t> hidden_dims{10, 10, 10, 10};
  std::size_t latent_dim = 2;
  std::size_t flow_length = 4;

  double lr = 0.002;
  std::uint64_t iterations = 500000;
  std::size_t batch_size = 1;
  std::uint64_t seed = 42;
  std::size_t subset = 0;   // 0 uses the full training set
  double grad_clip = 0.0;   // 0 disables global-norm clipping

  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;

  std::string out_dir = "out";
  std::string resume;  // checkpoint to continue training from
  std::uint64_t log_interval = 100;
  std::uint64_t checkpoint_interval = 0;  // 0 writes only the final checkpoint

  ModelConfig model() const;

  // "paper": full set, 500000 iterations. "desk": subset 10000, 50000
  // iterations. Anything else is an error.
  void apply_profile(const std::string& name);

  // Canonical key=value serialization (fixed key order, %.17g doubles);
  // parse(serialize()) round-trips exactly.
  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
};

std::string join_dims(const std::vector<std::size_t>& dims);
std::vector<std::size_t> parse_dims(const std::string& text);

}  // namespace pfvae
