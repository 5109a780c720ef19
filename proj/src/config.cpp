#include "pfvae/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pfvae {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
    std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: invalid value for '" + key + "': " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: invalid value for '" + key + "': " + value);
  }
}

}  // namespace

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << ",";
    out << dims[i];
  }
  return out.str();
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::string t = trim(text);
  if (t.empty()) return dims;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = t.find(',', start);
    std::string part = trim(t.substr(start, comma - start));
    dims.push_back(static_cast<std::size_t>(parse_u64("hidden_dims", part)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return dims;
}

ModelConfig RunConfig::model() const {
  return ModelConfig{input_dim, hidden_dims, latent_dim, flow_length};
}

void RunConfig::apply_profile(const std::string& name) {
  if (name == "paper") {
    iterations = 500000;
    subset = 0;
  } else if (name == "desk") {
    iterations = 50000;
    subset = 10000;
  } else {
    throw std::invalid_argument("config: unknown profile '" + name + "'");
  }
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "input_dim = " << input_dim << "\n";
  out << "hidden_dims = " << join_dims(hidden_dims) << "\n";
  out << "latent_dim = " << latent_dim << "\n";
  out << "flow_length = " << flow_length << "\n";
  out << "lr = " << format_double(lr) << "\n";
  out << "iterations = " << iterations << "\n";
  out << "batch_size = " << batch_size << "\n";
  out << "seed = " << seed << "\n";
  out << "subset = " << subset << "\n";
  out << "grad_clip = " << format_double(grad_clip) << "\n";
  out << "train_images = " << train_images << "\n";
  out << "train_labels = " << train_labels << "\n";
  out << "test_images = " << test_images << "\n";
  out << "test_labels = " << test_labels << "\n";
  out << "out_dir = " << out_dir << "\n";
  out << "resume = " << resume << "\n";
  out << "log_interval = " << log_interval << "\n";
  out << "checkpoint_interval = " << checkpoint_interval << "\n";
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value': " + line);
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (key == "input_dim") cfg.input_dim = parse_u64(key, value);
    else if (key == "hidden_dims") cfg.hidden_dims = parse_dims(value);
    else if (key == "latent_dim") cfg.latent_dim = parse_u64(key, value);
    else if (key == "flow_length") cfg.flow_length = parse_u64(key, value);
    else if (key == "lr") cfg.lr = parse_double(key, value);
    else if (key == "iterations") cfg.iterations = parse_u64(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_u64(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "subset") cfg.subset = parse_u64(key, value);
    else if (key == "grad_clip") cfg.grad_clip = parse_double(key, value);
    else if (key == "train_images") cfg.train_images = value;
    else if (key == "train_labels") cfg.train_labels = value;
    else if (key == "test_images") cfg.test_images = value;
    else if (key == "test_labels") cfg.test_labels = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "resume") cfg.resume = value;
    else if (key == "log_interval") cfg.log_interval = parse_u64(key, value);
    else if (key == "checkpoint_interval") cfg.checkpoint_interval = parse_u64(key, value);
    else
      throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                  std::to_string(lineno));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace pfvae
