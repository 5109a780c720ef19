#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pfvae/tensor.hpp"

namespace pfvae {

struct RawImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

// IDX binary format (big-endian header fields). Image magic 2051, label
// magic 2049. Loaders fail loudly on bad magic, truncation, or out-of-range
// labels.
RawImages load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const RawImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

// A labeled split with pixels scaled to [0, 1].
struct MnistSet {
  std::string split;  // "train" or "test"
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> images;  // count * rows * cols
  std::vector<int> labels;     // each in 0..9

  std::size_t pixel_count() const { return rows * cols; }
  Tensor image(std::size_t i) const;
  int label(std::size_t i) const;

  static MnistSet load(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path, std::string split);
  static MnistSet from_raw(const RawImages& raw, const std::vector<std::uint8_t>& labels,
                           std::string split);
};

// Deterministic example order. Each epoch is a seeded Fisher-Yates
// permutation derived purely from (seed, epoch), so the batch at any step can
// be recomputed without replaying history. With subset > 0, a fixed
// seed-derived subset of that size participates in every epoch.
class DataStream {
 public:
  DataStream(const MnistSet& set, std::size_t batch_size, std::uint64_t seed,
             std::size_t subset = 0);

  std::size_t active_count() const { return members_.size(); }
  std::size_t steps_per_epoch() const;
  // Dataset indices making up the batch for 0-based step.
  std::vector<std::size_t> batch_at(std::uint64_t step) const;
  const MnistSet& set() const { return *set_; }

 private:
  const std::vector<std::size_t>& epoch_permutation(std::uint64_t epoch) const;

  const MnistSet* set_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::vector<std::size_t> members_;
  mutable std::uint64_t cached_epoch_;
  mutable std::vector<std::size_t> cached_perm_;
};

}  // namespace pfvae
