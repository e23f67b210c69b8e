#pragma once

// Initial data generators for the solver. Every profile lands in the
// admissible set 0 <= u <= 1, v >= 0; the random generators draw from a
// caller-supplied seed so runs are reproducible.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <cctype>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vfc/error.hpp"
#include "vfc/grid.hpp"

namespace vfc::init {

inline std::vector<double> constant(const Grid1D& grid, double value) {
  return std::vector<double>(std::size_t(grid.n_cells()), value);
}

/// base + amplitude * exp(-((x - centre)/width)^2), centre given as a fraction of l.
inline std::vector<double> bump(const Grid1D& grid, double base, double amplitude, double centre_frac = 0.5,
                                double width_frac = 0.1) {
  require(width_frac > 0.0, ErrorKind::input, "bump width must be positive");
  std::vector<double> u(std::size_t(grid.n_cells()));
  const double c = centre_frac * grid.length(), w = width_frac * grid.length();
  for (int i = 0; i < grid.n_cells(); ++i) {
    const double z = (grid.center(i) - c) / w;
    u[std::size_t(i)] = base + amplitude * std::exp(-z * z);
  }
  return u;
}

/// `left` on cells with centre below split_frac * l, `right` elsewhere.
inline std::vector<double> step(const Grid1D& grid, double left, double right, double split_frac = 0.5) {
  std::vector<double> u(std::size_t(grid.n_cells()));
  for (int i = 0; i < grid.n_cells(); ++i) u[std::size_t(i)] = grid.center(i) < split_frac * grid.length() ? left : right;
  return u;
}

/// Independent uniform draws in [lo, hi] per cell.
inline std::vector<double> random_cells(const Grid1D& grid, double lo, double hi, std::uint64_t seed) {
  require(lo <= hi, ErrorKind::input, "random range needs lo <= hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> u(std::size_t(grid.n_cells()));
  for (auto& x : u) x = dist(rng);
  return u;
}

/// Smooth random field: a few cosine modes with seeded coefficients, rescaled
/// to span exactly [lo, hi]. Mode k has the Neumann shape cos(k pi x / l).
inline std::vector<double> random_smooth(const Grid1D& grid, double lo, double hi, std::uint64_t seed, int modes = 6) {
  require(lo < hi, ErrorKind::input, "random range needs lo < hi");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> coef(static_cast<std::size_t>(modes));
  for (int k = 0; k < modes; ++k) coef[std::size_t(k)] = dist(rng) / (k + 1);
  std::vector<double> u(std::size_t(grid.n_cells()), 0.0);
  for (int i = 0; i < grid.n_cells(); ++i) {
    const double x = grid.center(i) / grid.length();
    for (int k = 0; k < modes; ++k) u[std::size_t(i)] += coef[std::size_t(k)] * std::cos((k + 1) * std::numbers::pi * x);
  }
  const auto [mn, mx] = std::minmax_element(u.begin(), u.end());
  const double a = *mn, b = *mx;
  for (auto& x : u) x = b > a ? lo + (hi - lo) * (x - a) / (b - a) : 0.5 * (lo + hi);
  return u;
}

/// Reads columns x,u,v from a CSV (header and '#' lines skipped). The number
/// of data rows must equal the grid size.
inline State from_csv(const std::string& path, const Grid1D& grid) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open initial data file '" + path + "'");
  State s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' || line[0] == '.' || line[0] == '+'))
      continue;  // header row
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (row.size() < 3) fail(ErrorKind::config, "initial data rows need x,u,v in '" + path + "'");
    s.u.push_back(row[1]);
    s.v.push_back(row[2]);
  }
  if (int(s.u.size()) != grid.n_cells())
    fail(ErrorKind::config, "initial data file has " + std::to_string(s.u.size()) + " rows, grid has " +
                                std::to_string(grid.n_cells()) + " cells");
  return s;
}

}  // namespace vfc::init
