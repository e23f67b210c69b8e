#pragma once

#include <cmath>
#include <vector>

#include "vfc/error.hpp"

namespace vfc {

/// Uniform cell-centred mesh on (0, length).
class Grid1D {
 public:
  Grid1D(int n_cells, double length) : n_(n_cells), length_(length) {
    require(n_cells >= 4, ErrorKind::input, "grid needs at least 4 cells");
    require(length > 0.0 && std::isfinite(length), ErrorKind::input, "grid length must be positive");
  }

  int n_cells() const { return n_; }
  double length() const { return length_; }
  double dx() const { return length_ / n_; }
  double center(int i) const { return (i + 0.5) * dx(); }

  std::vector<double> centers() const {
    std::vector<double> x(n_);
    for (int i = 0; i < n_; ++i) x[i] = center(i);
    return x;
  }

  bool operator==(const Grid1D& o) const { return n_ == o.n_ && length_ == o.length_; }

 private:
  int n_;
  double length_;
};

/// Cell averages of density u and concentration v at time t.
struct State {
  std::vector<double> u;
  std::vector<double> v;
  double t = 0.0;
};

inline constexpr double tol_bound = 1e-10;

}  // namespace vfc
