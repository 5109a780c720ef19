#include "pfvae/mnist.hpp"

#include <fstream>
#include <stdexcept>

#include "pfvae/rng.hpp"

namespace pfvae {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

// Stream tags for deriving independent substreams from the run seed.
constexpr std::uint64_t kSubsetTag = 0x5355'4253'4554'0001ULL;
constexpr std::uint64_t kEpochTag = 0x4550'4f43'4800'0000ULL;

std::runtime_error idx_error(const std::filesystem::path& path, const std::string& what) {
  return std::runtime_error("idx format error in " + path.string() + ": " + what);
}

std::uint32_t read_u32_be(std::istream& in, const std::filesystem::path& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) throw idx_error(path, "truncated file");
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

RawImages load_idx_images(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::uint32_t magic = read_u32_be(in, path);
  if (magic != kImageMagic) {
    throw idx_error(path, "bad magic " + std::to_string(magic) + " (expected " +
                              std::to_string(kImageMagic) + ")");
  }
  RawImages out;
  out.count = read_u32_be(in, path);
  out.rows = read_u32_be(in, path);
  out.cols = read_u32_be(in, path);
  std::size_t n = out.count * out.rows * out.cols;
  out.pixels.resize(n);
  if (!in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(n))) {
    throw idx_error(path, "truncated file");
  }
  return out;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::uint32_t magic = read_u32_be(in, path);
  if (magic != kLabelMagic) {
    throw idx_error(path, "bad magic " + std::to_string(magic) + " (expected " +
                              std::to_string(kLabelMagic) + ")");
  }
  std::uint32_t count = read_u32_be(in, path);
  std::vector<std::uint8_t> labels(count);
  if (!in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count))) {
    throw idx_error(path, "truncated file");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 9) {
      throw idx_error(path, "label " + std::to_string(int(labels[i])) + " out of range at index " +
                                std::to_string(i));
    }
  }
  return labels;
}

void write_idx_images(const std::filesystem::path& path, const RawImages& images) {
  if (images.pixels.size() != images.count * images.rows * images.cols) {
    throw std::invalid_argument("idx write: pixel buffer does not match dimensions");
  }
  std::ofstream out = open_output(path);
  write_u32_be(out, kImageMagic);
  write_u32_be(out, static_cast<std::uint32_t>(images.count));
  write_u32_be(out, static_cast<std::uint32_t>(images.rows));
  write_u32_be(out, static_cast<std::uint32_t>(images.cols));
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out = open_output(path);
  write_u32_be(out, kLabelMagic);
  write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Tensor MnistSet::image(std::size_t i) const {
  if (i >= count) throw std::out_of_range("dataset: image index out of range");
  std::size_t p = pixel_count();
  std::vector<double> data(images.begin() + static_cast<std::ptrdiff_t>(i * p),
                           images.begin() + static_cast<std::ptrdiff_t>((i + 1) * p));
  return Tensor(Shape{p}, std::move(data));
}

int MnistSet::label(std::size_t i) const {
  if (i >= count) throw std::out_of_range("dataset: label index out of range");
  return labels[i];
}

MnistSet MnistSet::load(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, std::string split) {
  return from_raw(load_idx_images(images_path), load_idx_labels(labels_path), std::move(split));
}

MnistSet MnistSet::from_raw(const RawImages& raw, const std::vector<std::uint8_t>& labels,
                            std::string split) {
  if (raw.count != labels.size()) {
    throw std::invalid_argument("dataset: " + std::to_string(raw.count) + " images vs " +
                                std::to_string(labels.size()) + " labels");
  }
  MnistSet set;
  set.split = std::move(split);
  set.count = raw.count;
  set.rows = raw.rows;
  set.cols = raw.cols;
  set.images.resize(raw.pixels.size());
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    set.images[i] = static_cast<double>(raw.pixels[i]) / 255.0;
  }
  set.labels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 9) throw std::invalid_argument("dataset: label out of range");
    set.labels[i] = labels[i];
  }
  return set;
}

DataStream::DataStream(const MnistSet& set, std::size_t batch_size, std::uint64_t seed,
                       std::size_t subset)
    : set_(&set), batch_size_(batch_size), seed_(seed), cached_epoch_(UINT64_MAX) {
  if (set.count == 0) throw std::invalid_argument("data stream: empty dataset");
  if (batch_size == 0) throw std::invalid_argument("data stream: batch_size must be positive");

  if (subset == 0 || subset >= set.count) {
    members_.resize(set.count);
    for (std::size_t i = 0; i < set.count; ++i) members_[i] = i;
  } else {
    // Fixed membership drawn once from a dedicated stream; epochs reshuffle
    // the same members.
    Rng rng(Rng::mix(seed, kSubsetTag));
    std::vector<std::size_t> perm = rng.permutation(set.count);
    members_.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(subset));
  }
}

std::size_t DataStream::steps_per_epoch() const {
  return (members_.size() + batch_size_ - 1) / batch_size_;
}

const std::vector<std::size_t>& DataStream::epoch_permutation(std::uint64_t epoch) const {
  if (cached_epoch_ != epoch) {
    Rng rng(Rng::mix(seed_, kEpochTag ^ epoch));
    cached_perm_ = rng.permutation(members_.size());
    cached_epoch_ = epoch;
  }
  return cached_perm_;
}

std::vector<std::size_t> DataStream::batch_at(std::uint64_t step) const {
  std::size_t spe = steps_per_epoch();
  std::uint64_t epoch = step / spe;
  std::size_t pos = static_cast<std::size_t>(step % spe);
  const std::vector<std::size_t>& perm = epoch_permutation(epoch);

  std::size_t begin = pos * batch_size_;
  std::size_t end = std::min(begin + batch_size_, members_.size());
  std::vector<std::size_t> batch;
  batch.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) batch.push_back(members_[perm[i]]);
  return batch;
}

}  // namespace pfvae
