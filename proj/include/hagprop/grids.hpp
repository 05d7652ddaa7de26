#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hagprop {

// Uniform symmetric w-grid [-half_width, half_width] with an odd node count
// (w = 0 is a node).  The span exceeds the cutoff radius b1 by a margin so
// one-sided stencil closures near the ends never touch the region the
// approximation consumes.
struct WGrid {
  double half_width = 0;
  double h = 0;
  long n = 0;  // odd

  WGrid() = default;
  WGrid(double half_width_, double h_request) {
    half_width = half_width_;
    long half_n = static_cast<long>(std::ceil(half_width / h_request));
    n = 2 * half_n + 1;
    h = half_width / half_n;
  }
  double node(long i) const { return -half_width + i * h; }
  long closest(double w) const { return std::lround((w + half_width) / h); }
};

// Uniform time grid on [0, T].
struct TimeGrid {
  double T = 0;
  long n = 0;
  double h = 0;

  TimeGrid() = default;
  TimeGrid(double T_, long n_nodes) : T(T_), n(n_nodes), h(T_ / (n_nodes - 1)) {
    if (n_nodes < 8) throw std::invalid_argument("TimeGrid: need at least 8 nodes");
  }
  double node(long k) const { return k * h; }
};

// 4th-order first/second derivative stencils on a uniform grid with
// one-sided closures at both ends.  Integer numerators plus a common scale:
// apply as scale * sum_i w[i] * f[start+i], which kills constants exactly.
struct Stencil {
  long start;
  std::array<double, 6> w;
  int len;
  double scale;

  template <typename F>
  auto apply(F&& value) const {
    auto acc = value(start) * w[0];
    for (int q = 1; q < len; ++q) acc += value(start + q) * w[q];
    return acc * scale;
  }
};

Stencil d1_stencil(long i, long n, double h);
Stencil d2_stencil(long i, long n, double h);

// Weights of the cumulative 4th-order integral: given samples f_0..f_{n-1},
// integral over [x_k, x_{k+1}] = h * sum_i coef[i] * f_{start+i}.
Stencil int_stencil(long k, long n, double h);

// 4-point (cubic) Lagrange interpolation on a uniform grid: fills the base
// index and the 4 weights for evaluation at fractional position s = (x-x0)/h.
void cubic_interp_weights(double s, long n, long& k0, std::array<double, 4>& w);

}  // namespace hagprop
