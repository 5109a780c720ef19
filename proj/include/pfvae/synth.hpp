#pragma once

#include <cstdint>
#include <filesystem>

#include "pfvae/mnist.hpp"

namespace pfvae {

// Deterministic synthetic 10-class digit corpus in the same 28x28 IDX layout
// as MNIST, for hermetic training-scale tests. Glyphs are seven-segment
// digits with seeded translation, brightness and pixel-noise jitter; classes
// are exactly balanced (label i % 10).
RawImages synth_images(std::size_t count, std::uint64_t seed,
                       std::vector<std::uint8_t>* labels_out);
MnistSet synth_set(std::size_t count, std::uint64_t seed, std::string split);

// Writes train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-...,
// t10k-labels-... into dir (created if missing).
void write_synth_idx(const std::filesystem::path& dir, std::size_t train_count,
                     std::size_t test_count, std::uint64_t seed);

}  // namespace pfvae
