#include "hagprop/grids.hpp"

#include <algorithm>

namespace hagprop {

// Weights are kept as exact integer numerators with a common scale applied
// after accumulation, so stencils annihilate constants exactly.

Stencil d1_stencil(long i, long n, double h) {
  Stencil s{};
  s.scale = 1.0 / (12.0 * h);
  if (i >= 2 && i + 2 < n) {
    s.start = i - 2;
    s.w = {1, -8, 0, 8, -1, 0};
    s.len = 5;
  } else if (i == 0) {
    s.start = 0;
    s.w = {-25, 48, -36, 16, -3, 0};
    s.len = 5;
  } else if (i == 1) {
    s.start = 0;
    s.w = {-3, -10, 18, -6, 1, 0};
    s.len = 5;
  } else if (i == n - 2) {
    s.start = n - 5;
    s.w = {-1, 6, -18, 10, 3, 0};
    s.len = 5;
  } else {  // i == n-1
    s.start = n - 5;
    s.w = {3, -16, 36, -48, 25, 0};
    s.len = 5;
  }
  return s;
}

Stencil d2_stencil(long i, long n, double h) {
  Stencil s{};
  s.scale = 1.0 / (12.0 * h * h);
  if (i >= 2 && i + 2 < n) {
    s.start = i - 2;
    s.w = {-1, 16, -30, 16, -1, 0};
    s.len = 5;
  } else if (i == 0) {
    s.start = 0;
    s.w = {45, -154, 214, -156, 61, -10};
    s.len = 6;
  } else if (i == 1) {
    s.start = 0;
    s.w = {10, -15, -4, 14, -6, 1};
    s.len = 6;
  } else if (i == n - 2) {
    s.start = n - 6;
    s.w = {1, -6, 14, -4, -15, 10};
    s.len = 6;
  } else {  // i == n-1
    s.start = n - 6;
    s.w = {-10, 61, -156, 214, -154, 45};
    s.len = 6;
  }
  return s;
}

Stencil int_stencil(long k, long n, double h) {
  Stencil s{};
  s.scale = h / 24.0;
  if (k == 0) {
    s.start = 0;
    s.w = {9, 19, -5, 1, 0, 0};
    s.len = 4;
  } else if (k + 2 <= n - 1) {
    s.start = k - 1;
    s.w = {-1, 13, 13, -1, 0, 0};
    s.len = 4;
  } else {  // last interval
    s.start = n - 4;
    s.w = {1, -5, 19, 9, 0, 0};
    s.len = 4;
  }
  return s;
}

void cubic_interp_weights(double s, long n, long& k0, std::array<double, 4>& w) {
  k0 = static_cast<long>(std::floor(s)) - 1;
  k0 = std::clamp<long>(k0, 0, n - 4);
  for (int i = 0; i < 4; ++i) {
    double L = 1.0;
    for (int j = 0; j < 4; ++j)
      if (j != i) L *= (s - (k0 + j)) / static_cast<double>(i - j);
    w[i] = L;
  }
}

}  // namespace hagprop
