#pragma once

#include <complex>
#include <string>
#include <vector>

namespace hagprop {

// Periodic nuclear grid [x_min, x_min + n*dx), power-of-two node count.
struct XGrid {
  double x_min = 0;
  double dx = 0;
  long n = 0;
  double node(long i) const { return x_min + i * dx; }
  double length() const { return n * dx; }
  bool operator==(const XGrid& o) const {
    return x_min == o.x_min && dx == o.dx && n == o.n;
  }
};

// Nuclear-grid x electronic-level wavefunction; node-major values v[i*nel + e].
struct GridState {
  XGrid grid;
  int nel = 1;
  double t = 0;
  double eps = 0;
  std::vector<std::complex<double>> v;

  void resize() { v.assign(static_cast<std::size_t>(grid.n) * nel, {0, 0}); }
  std::complex<double>& at(long i, int e) { return v[static_cast<std::size_t>(i) * nel + e]; }
  std::complex<double> at(long i, int e) const {
    return v[static_cast<std::size_t>(i) * nel + e];
  }
  double norm() const;
};

double error_norm(const GridState& x, const GridState& y);  // grid L2 of the difference

// Binary snapshot format shared by the assembler and the solver:
// magic "HGST0001", int64 {d=1, nel, n}, double {x_min, dx, t, eps},
// then node-major little-endian (Re, Im) float64 pairs.
void write_grid_state(const GridState& s, const std::string& path);
GridState read_grid_state(const std::string& path);

}  // namespace hagprop
