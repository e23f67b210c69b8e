#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <vector>

namespace vfc::quad {

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 tables).
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kronrod_weights[7];
  double gauss = fc * gauss_weights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kronrod_nodes[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kronrod_weights[j] * pair;
    if (j % 2 == 1) gauss += gauss_weights[j / 2] * pair;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate drops below max(abs_tol, rel_tol*|I|) or max_panels is reached.
/// Nodes are interior, so integrable endpoint singularities are tolerated.
template <class F>
Result integrate(const F& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-13,
                 int max_panels = 4000) {
  Result out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<detail::Panel> heap;
  heap.push(detail::gk15(f, a, b));
  double total = heap.top().value;
  double error = heap.top().error;
  int panels = 1;
  while (error > std::max(abs_tol, rel_tol * std::abs(total)) && panels < max_panels) {
    const detail::Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) break;  // interval exhausted in floating point
    heap.pop();
    const detail::Panel left = detail::gk15(f, worst.a, mid);
    const detail::Panel right = detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = sign * total;
  out.abs_error = error;
  out.evaluations = 15 * (2 * panels - 1);
  out.converged = error <= std::max(abs_tol, rel_tol * std::abs(total));
  return out;
}

/// Integration over [a, b] with forced breakpoints (kinks of the integrand).
template <class F>
Result integrate_split(const F& f, double a, double b, const std::vector<double>& breaks,
                       double abs_tol = 1e-12, double rel_tol = 1e-13) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  std::vector<double> pts{lo};
  for (double p : breaks)
    if (p > lo && p < hi) pts.push_back(p);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  Result out;
  out.converged = true;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Result piece = integrate(f, pts[i], pts[i + 1], abs_tol / double(pts.size() - 1), rel_tol);
    out.value += piece.value;
    out.abs_error += piece.abs_error;
    out.evaluations += piece.evaluations;
    out.converged = out.converged && piece.converged;
  }
  if (b < a) out.value = -out.value;
  return out;
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  template <class F>
  double operator()(const F& f, double a, double b) const {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(c + h * nodes[i]);
    return s * h;
  }
};

}  // namespace vfc::quad
