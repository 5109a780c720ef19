#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pfvae {

struct DensityGrid {
  std::size_t resolution = 0;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  // Row-major, rows indexed by y from y1 (top) down to y0, columns by x from
  // x0 to x1; matches the PGM pixel order.
  std::vector<double> values;

  double value(std::size_t row, std::size_t col) const { return values[row * resolution + col]; }
};

// Gaussian product-kernel KDE with Scott's rule bandwidth per dimension:
// h_i = sigma_i * n^(-1/6) for d = 2.
struct Kde2D {
  std::vector<std::array<double, 2>> points;
  double hx = 0, hy = 0;

  static Kde2D fit(std::vector<std::array<double, 2>> pts);
  double density(double x, double y) const;
};

DensityGrid kde_grid(const Kde2D& kde, double x0, double x1, double y0, double y1,
                     std::size_t resolution);

// Data bounds expanded by margin_fraction of each span on both sides.
std::array<double, 4> auto_bounds(const std::vector<std::array<double, 2>>& pts,
                                  double margin_fraction);

// x,y,density rows, row-major grid order.
void write_density_csv(const std::filesystem::path& path, const DensityGrid& grid);
// Binary 8-bit PGM ("P5", maxval 255), densities scaled by the grid maximum.
void write_density_pgm(const std::filesystem::path& path, const DensityGrid& grid);

}  // namespace pfvae
