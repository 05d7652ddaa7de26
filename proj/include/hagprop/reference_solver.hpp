#pragma once

#include <memory>

#include "hagprop/ansatz.hpp"
#include "hagprop/electronic_model.hpp"
#include "hagprop/grid_state.hpp"

namespace hagprop {

struct ResolutionError : std::runtime_error {
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

// Strang split-operator integrator for  i eps^2 dpsi/dt = -(eps^4/2) Lap psi + h(X) psi
// on a periodic nuclear grid: exact spectral kinetic factor
// exp(-i dt eps^2 k^2 / 2), pointwise Hermitian matrix exponential for the
// potential half-steps (cached; h is t-independent).  Unconditionally stable,
// second order in dt, norm-preserving to roundoff.
class SplitOperatorSolver {
 public:
  SplitOperatorSolver(const ElectronicModel& model, const XGrid& grid, double eps);
  ~SplitOperatorSolver();

  SplitOperatorSolver(const SplitOperatorSolver&) = delete;
  SplitOperatorSolver& operator=(const SplitOperatorSolver&) = delete;

  const XGrid& grid() const { return grid_; }
  double eps() const { return eps_; }

  // checks the resolution invariants against a trajectory before running
  void check_resolution(const Trajectory& traj, double b1, int max_degree) const;

  GridState propagate(const GridState& psi0, double T, double dt);

  // runs at dt and dt/2, halving until the endpoint disagreement drops below
  // tol (or max_halvings is hit); returns the finest result and the estimate
  struct FloorResult {
    GridState psi;
    double floor_estimate;
    double dt_used;
  };
  FloorResult propagate_with_floor(const GridState& psi0, double T, double dt0, double tol,
                                   int max_halvings = 6);

  // H psi = -(eps^4/2) Lap psi + h(X) psi (spectral Laplacian)
  GridState apply_H(const GridState& psi) const;

 private:
  const ElectronicModel* model_;
  XGrid grid_;
  double eps_;
  int nel_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  void ensure_potential_cache(double dt_half);
};

// ||i eps^2 dPsi/dt - H Psi|| of the assembled ansatz at time-grid node k,
// the Duhamel residual integrand.
double duhamel_residual_at_node(const Ansatz& ansatz, const SplitOperatorSolver& solver, long k);

// Residual series over a Simpson subgrid of the shared time grid: returns
// pairs (t, ||xi||) and the accumulated bound  int_0^T ||xi|| dt / eps^2.
struct DuhamelReport {
  std::vector<std::pair<double, double>> xi;
  double bound = 0;
};
DuhamelReport duhamel_scan(const Ansatz& ansatz, const SplitOperatorSolver& solver,
                           int n_probe = 33);

}  // namespace hagprop
