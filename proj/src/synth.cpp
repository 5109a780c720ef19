#include "pfvae/synth.hpp"

#include <algorithm>
#include <cmath>

#include "pfvae/rng.hpp"

namespace pfvae {

namespace {

constexpr std::size_t kSide = 28;

// Seven-segment layout inside the 28x28 canvas, bar thickness 2.
//   A: top, G: middle, D: bottom; F/B upper sides, E/C lower sides.
enum Segment { A, B, C, D, E, F, G };

constexpr unsigned char kDigitSegments[10] = {
    /*0*/ 0b0111111, /*1*/ 0b0000110, /*2*/ 0b1011011, /*3*/ 0b1001111, /*4*/ 0b1100110,
    /*5*/ 0b1101101, /*6*/ 0b1111101, /*7*/ 0b0000111, /*8*/ 0b1111111, /*9*/ 0b1101111,
};

bool has_segment(int digit, Segment s) { return (kDigitSegments[digit] >> s) & 1; }

void fill_rect(std::vector<double>& canvas, int r0, int r1, int c0, int c1, double v) {
  for (int r = r0; r <= r1; ++r) {
    if (r < 0 || r >= int(kSide)) continue;
    for (int c = c0; c <= c1; ++c) {
      if (c < 0 || c >= int(kSide)) continue;
      canvas[std::size_t(r) * kSide + std::size_t(c)] = v;
    }
  }
}

void render_digit(std::vector<double>& canvas, int digit, int dr, int dc, double brightness) {
  // Base frame: columns 8..19, rows 4..23.
  int top = 4 + dr, mid = 13 + dr, bot = 22 + dr;
  int left = 8 + dc, right = 18 + dc;
  if (has_segment(digit, A)) fill_rect(canvas, top, top + 1, left + 1, right + 1, brightness);
  if (has_segment(digit, G)) fill_rect(canvas, mid, mid + 1, left + 1, right + 1, brightness);
  if (has_segment(digit, D)) fill_rect(canvas, bot, bot + 1, left + 1, right + 1, brightness);
  if (has_segment(digit, F)) fill_rect(canvas, top + 1, mid, left, left + 1, brightness);
  if (has_segment(digit, B)) fill_rect(canvas, top + 1, mid, right, right + 1, brightness);
  if (has_segment(digit, E)) fill_rect(canvas, mid + 1, bot, left, left + 1, brightness);
  if (has_segment(digit, C)) fill_rect(canvas, mid + 1, bot, right, right + 1, brightness);
}

}  // namespace

RawImages synth_images(std::size_t count, std::uint64_t seed,
                       std::vector<std::uint8_t>* labels_out) {
  RawImages out;
  out.count = count;
  out.rows = kSide;
  out.cols = kSide;
  out.pixels.resize(count * kSide * kSide);
  if (labels_out) labels_out->resize(count);

  Rng rng(seed);
  std::vector<double> canvas(kSide * kSide);
  for (std::size_t i = 0; i < count; ++i) {
    int digit = static_cast<int>(i % 10);
    if (labels_out) (*labels_out)[i] = static_cast<std::uint8_t>(digit);

    std::fill(canvas.begin(), canvas.end(), 0.0);
    int dr = static_cast<int>(rng.below(5)) - 2;
    int dc = static_cast<int>(rng.below(5)) - 2;
    double brightness = rng.uniform(0.7, 1.0);
    render_digit(canvas, digit, dr, dc, brightness);

    for (std::size_t p = 0; p < canvas.size(); ++p) {
      double v = canvas[p] + 0.05 * rng.normal();
      v = std::min(std::max(v, 0.0), 1.0);
      out.pixels[i * kSide * kSide + p] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return out;
}

MnistSet synth_set(std::size_t count, std::uint64_t seed, std::string split) {
  std::vector<std::uint8_t> labels;
  RawImages raw = synth_images(count, seed, &labels);
  return MnistSet::from_raw(raw, labels, std::move(split));
}

void write_synth_idx(const std::filesystem::path& dir, std::size_t train_count,
                     std::size_t test_count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> labels;
  RawImages train = synth_images(train_count, Rng::mix(seed, 1), &labels);
  write_idx_images(dir / "train-images-idx3-ubyte", train);
  write_idx_labels(dir / "train-labels-idx1-ubyte", labels);
  RawImages test = synth_images(test_count, Rng::mix(seed, 2), &labels);
  write_idx_images(dir / "t10k-images-idx3-ubyte", test);
  write_idx_labels(dir / "t10k-labels-idx1-ubyte", labels);
}

}  // namespace pfvae
