#include "pfvae/density.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pfvae {

namespace {

double sample_std(const std::vector<std::array<double, 2>>& pts, int dim) {
  double n = static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += p[dim];
  mean /= n;
  double ss = 0.0;
  for (const auto& p : pts) {
    double d = p[dim] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

Kde2D Kde2D::fit(std::vector<std::array<double, 2>> pts) {
  if (pts.size() < 2) throw std::invalid_argument("kde: need at least 2 points");
  Kde2D kde;
  kde.points = std::move(pts);
  double factor = std::pow(static_cast<double>(kde.points.size()), -1.0 / 6.0);
  kde.hx = std::max(sample_std(kde.points, 0) * factor, 1e-9);
  kde.hy = std::max(sample_std(kde.points, 1) * factor, 1e-9);
  return kde;
}

double Kde2D::density(double x, double y) const {
  double acc = 0.0;
  for (const auto& p : points) {
    double dx = (x - p[0]) / hx;
    double dy = (y - p[1]) / hy;
    acc += std::exp(-0.5 * (dx * dx + dy * dy));
  }
  double norm = static_cast<double>(points.size()) * 2.0 * M_PI * hx * hy;
  return acc / norm;
}

DensityGrid kde_grid(const Kde2D& kde, double x0, double x1, double y0, double y1,
                     std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("kde grid: resolution must be at least 2");
  if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("kde grid: empty bounds");
  DensityGrid grid;
  grid.resolution = resolution;
  grid.x0 = x0;
  grid.x1 = x1;
  grid.y0 = y0;
  grid.y1 = y1;
  grid.values.resize(resolution * resolution);
  double n1 = static_cast<double>(resolution - 1);
  for (std::size_t row = 0; row < resolution; ++row) {
    double y = y1 - (y1 - y0) * static_cast<double>(row) / n1;
    for (std::size_t col = 0; col < resolution; ++col) {
      double x = x0 + (x1 - x0) * static_cast<double>(col) / n1;
      grid.values[row * resolution + col] = kde.density(x, y);
    }
  }
  return grid;
}

std::array<double, 4> auto_bounds(const std::vector<std::array<double, 2>>& pts,
                                  double margin_fraction) {
  if (pts.empty()) throw std::invalid_argument("auto_bounds: no points");
  double x0 = pts[0][0], x1 = pts[0][0], y0 = pts[0][1], y1 = pts[0][1];
  for (const auto& p : pts) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  // Degenerate spans still need a usable window.
  double sx = std::max(x1 - x0, 1e-6);
  double sy = std::max(y1 - y0, 1e-6);
  return {x0 - margin_fraction * sx, x1 + margin_fraction * sx, y0 - margin_fraction * sy,
          y1 + margin_fraction * sy};
}

void write_density_csv(const std::filesystem::path& path, const DensityGrid& grid) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "x,y,density\n";
  char buf[128];
  double n1 = static_cast<double>(grid.resolution - 1);
  for (std::size_t row = 0; row < grid.resolution; ++row) {
    double y = grid.y1 - (grid.y1 - grid.y0) * static_cast<double>(row) / n1;
    for (std::size_t col = 0; col < grid.resolution; ++col) {
      double x = grid.x0 + (grid.x1 - grid.x0) * static_cast<double>(col) / n1;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x, y, grid.value(row, col));
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_density_pgm(const std::filesystem::path& path, const DensityGrid& grid) {
  double max_v = 0.0;
  for (double v : grid.values) max_v = std::max(max_v, v);
  if (max_v <= 0.0) max_v = 1.0;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << grid.resolution << " " << grid.resolution << "\n255\n";
  std::vector<unsigned char> row(grid.resolution);
  for (std::size_t r = 0; r < grid.resolution; ++r) {
    for (std::size_t c = 0; c < grid.resolution; ++c) {
      row[c] = static_cast<unsigned char>(std::lround(255.0 * grid.value(r, c) / max_v));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace pfvae
