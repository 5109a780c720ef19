#include "pfvae/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pfvae {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'V', 'A', 'E', 'C', 'K', 'P'};

std::runtime_error ckpt_error(const std::filesystem::path& path, const std::string& what) {
  return std::runtime_error("checkpoint format error in " + path.string() + ": " + what);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  write_string(out, name);
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t i = 0; i < t.size(); ++i) write_f64(out, t[i]);
}

struct Reader {
  std::ifstream in;
  std::filesystem::path path;

  void read_bytes(void* dst, std::size_t n) {
    if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
      throw ckpt_error(path, "truncated");
    }
  }

  std::uint32_t read_u32() {
    unsigned char buf[4];
    read_bytes(buf, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[i]) << (8 * i);
    return v;
  }

  std::uint64_t read_u64() {
    unsigned char buf[8];
    read_bytes(buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
    return v;
  }

  double read_f64() {
    std::uint64_t bits = read_u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string read_string() {
    std::uint32_t n = read_u32();
    std::string s(n, '\0');
    read_bytes(s.data(), n);
    return s;
  }

  std::pair<std::string, Tensor> read_tensor() {
    std::string name = read_string();
    std::uint32_t rank = read_u32();
    Shape shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) shape[i] = read_u32();
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = read_f64();
    return {std::move(name), std::move(t)};
  }
};

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_string(out, config.serialize());
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) write_tensor(out, name, t);
    write_u32(out, static_cast<std::uint32_t>(opt_moments.size()));
    for (const auto& [name, t] : opt_moments) write_tensor(out, name, t);
    write_u64(out, opt_steps);
    write_u64(out, iteration);
    write_string(out, rng_state);
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  Reader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  if (!r.in) throw std::runtime_error("cannot open " + path.string());

  char magic[8];
  r.read_bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw ckpt_error(path, "bad magic");
  std::uint32_t version = r.read_u32();
  if (version != kVersion) {
    throw std::runtime_error("checkpoint version mismatch in " + path.string() + ": file has " +
                             std::to_string(version) + ", expected " + std::to_string(kVersion));
  }

  Checkpoint ckpt;
  ckpt.config = RunConfig::parse(r.read_string());
  std::uint32_t n_params = r.read_u32();
  ckpt.params.reserve(n_params);
  for (std::uint32_t i = 0; i < n_params; ++i) ckpt.params.push_back(r.read_tensor());
  std::uint32_t n_opt = r.read_u32();
  ckpt.opt_moments.reserve(n_opt);
  for (std::uint32_t i = 0; i < n_opt; ++i) ckpt.opt_moments.push_back(r.read_tensor());
  ckpt.opt_steps = r.read_u64();
  ckpt.iteration = r.read_u64();
  ckpt.rng_state = r.read_string();
  return ckpt;
}

}  // namespace pfvae
