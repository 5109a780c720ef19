// Writes a deterministic synthetic digit corpus in MNIST's IDX layout, for
// hermetic training runs and tests.

#include <iostream>

#include "CLI11.hpp"
#include "pfvae/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic 28x28 digit corpus in IDX format"};
  std::string out_dir = "data";
  std::size_t train_count = 12000;
  std::size_t test_count = 2000;
  std::uint64_t seed = 7;
  app.add_option("--out,--out_dir", out_dir, "output directory");
  app.add_option("--train", train_count, "training images");
  app.add_option("--test", test_count, "test images");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    pfvae::write_synth_idx(out_dir, train_count, test_count, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote " << train_count << " train / " << test_count << " test images to " << out_dir
            << "\n";
  return 0;
}
