#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pfvae/checkpoint.hpp"
#include "pfvae/rng.hpp"

using namespace pfvae;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "pfvae_ckpt_test";
  fs::create_directories(dir);
  return dir;
}

Checkpoint sample_checkpoint() {
  Checkpoint ckpt;
  ckpt.config.seed = 7;
  ckpt.config.flow_length = 2;
  ckpt.config.train_images = "data/train-images-idx3-ubyte";
  ckpt.params.emplace_back("encoder.0.w", Tensor(Shape{2, 3}, {1, 2, 3, 4, 5, 6}));
  ckpt.params.emplace_back("flow.0.b", Tensor::scalar(-0.125));
  ckpt.opt_moments.emplace_back("m.encoder.0.w", Tensor(Shape{2, 3}, {.1, .2, .3, .4, .5, .6}));
  ckpt.opt_moments.emplace_back("m.flow.0.b", Tensor::scalar(0.5));
  ckpt.opt_moments.emplace_back("v.encoder.0.w", Tensor(Shape{2, 3}));
  ckpt.opt_moments.emplace_back("v.flow.0.b", Tensor::scalar(0.25));
  ckpt.opt_steps = 1234;
  ckpt.iteration = 5678;
  Rng rng(99);
  rng.next_u64();
  ckpt.rng_state = rng.state();
  return ckpt;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("checkpoint round trip preserves every field") {
  fs::path p = temp_dir() / "ckpt.bin";
  Checkpoint ckpt = sample_checkpoint();
  ckpt.save(p);
  Checkpoint back = Checkpoint::load(p);

  CHECK(back.config.serialize() == ckpt.config.serialize());
  REQUIRE(back.params.size() == 2);
  CHECK(back.params[0].first == "encoder.0.w");
  CHECK(back.params[0].second.shape() == Shape{2, 3});
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back.params[0].second[i] == ckpt.params[0].second[i]);
  }
  CHECK(back.params[1].second.item() == -0.125);
  REQUIRE(back.opt_moments.size() == 4);
  CHECK(back.opt_moments[3].first == "v.flow.0.b");
  CHECK(back.opt_moments[3].second.item() == 0.25);
  CHECK(back.opt_steps == 1234);
  CHECK(back.iteration == 5678);
  CHECK(back.rng_state == ckpt.rng_state);

  // The restored rng state drives an identical stream.
  Rng a(1), b(1);
  a.restore(ckpt.rng_state);
  b.restore(back.rng_state);
  for (int i = 0; i < 20; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("save(load(p)) is byte-identical") {
  fs::path p1 = temp_dir() / "first.bin";
  fs::path p2 = temp_dir() / "second.bin";
  Checkpoint ckpt = sample_checkpoint();
  ckpt.save(p1);
  Checkpoint::load(p1).save(p2);
  CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("saving twice to the same path replaces atomically") {
  fs::path p = temp_dir() / "replace.bin";
  Checkpoint ckpt = sample_checkpoint();
  ckpt.save(p);
  ckpt.iteration = 9999;
  ckpt.save(p);
  CHECK(Checkpoint::load(p).iteration == 9999);
  // No stray temp files left behind.
  int files = 0;
  for (const auto& entry : fs::directory_iterator(temp_dir())) {
    if (entry.path().filename().string().find("replace") != std::string::npos) ++files;
  }
  CHECK(files == 1);
}

TEST_CASE("scalar tensors survive with rank zero") {
  fs::path p = temp_dir() / "scalar.bin";
  Checkpoint ckpt;
  ckpt.params.emplace_back("b", Tensor::scalar(3.25));
  ckpt.save(p);
  Checkpoint back = Checkpoint::load(p);
  CHECK(back.params[0].second.is_scalar());
  CHECK(back.params[0].second.item() == 3.25);
}

TEST_CASE("bad magic is rejected with the path in the message") {
  fs::path p = temp_dir() / "notackpt.bin";
  {
    std::ofstream out(p, std::ios::binary);
    out << "PFVAEXXX and then some bytes to chew on";
  }
  try {
    Checkpoint::load(p);
    FAIL("expected a format error");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("bad magic") != std::string::npos);
    CHECK(msg.find("notackpt.bin") != std::string::npos);
  }
}

TEST_CASE("truncation anywhere is caught") {
  fs::path full = temp_dir() / "full.bin";
  sample_checkpoint().save(full);
  std::string bytes = read_bytes(full);
  // Cut at several depths: inside magic, header, tensor data, trailing state.
  for (std::size_t keep :
       {std::size_t(4), std::size_t(10), std::size_t(40), bytes.size() / 2, bytes.size() - 3}) {
    fs::path p = temp_dir() / ("cut_" + std::to_string(keep) + ".bin");
    {
      std::ofstream out(p, std::ios::binary);
      out.write(bytes.data(), std::streamsize(keep));
    }
    CAPTURE(keep);
    try {
      Checkpoint::load(p);
      FAIL("expected a format error for truncated file");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
  }
}

TEST_CASE("version mismatches name both versions") {
  fs::path p = temp_dir() / "future.bin";
  sample_checkpoint().save(p);
  std::string bytes = read_bytes(p);
  bytes[8] = 9;  // little-endian u32 version right after the 8-byte magic
  {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  try {
    Checkpoint::load(p);
    FAIL("expected a version error");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("version") != std::string::npos);
    CHECK(msg.find("9") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
}

TEST_CASE("missing checkpoint file names the path") {
  try {
    Checkpoint::load(temp_dir() / "ghost.bin");
    FAIL("expected an open error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("ghost.bin") != std::string::npos);
  }
}
