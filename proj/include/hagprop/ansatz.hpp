#pragma once

#include "hagprop/expansion_engine.hpp"
#include "hagprop/grid_state.hpp"

namespace hagprop {

// Smooth cutoff: F == 1 on |w| <= b0, F == 0 on |w| >= b1, built from the
// step s(u) = rho(u)/(rho(u)+rho(1-u)), rho(u) = exp(-1/u).
class CutoffF {
 public:
  CutoffF(double b0, double b1);
  double b0() const { return b0_; }
  double b1() const { return b1_; }
  double operator()(double w) const;
  double derivative(double w) const;

 private:
  double b0_, b1_;
};

// Order-N approximate solution on the nuclear grid, assembled from the
// trajectory, the coefficient fields, the phase-fixed electronic section,
// and the cutoff:
//   Psi = F(w) e^{iS/eps^2} sum_j [ sum_{n<=N} eps^n c_{n,j} Phi
//                                  + sum_{2<=n<=N+2} eps^n d_{n,j} ] phi_j(hbar=eps^2)
// Coefficient-field values off the (w, t) lattice come from cubic interpolation.
class Ansatz {
 public:
  Ansatz(const ExpansionEngine& engine, const CutoffF& cutoff, double eps, int N);

  int order() const { return N_; }
  double eps() const { return eps_; }

  GridState evaluate(double t, const XGrid& grid) const;

  // d/dt of the assembled state at a shared-time-grid node (exact in-basis
  // packet dynamics, 4th-order grid differences of the stored fields)
  GridState evaluate_dt_at_node(long k, const XGrid& grid) const;

  double localization_mass(double t, double b, const XGrid& grid) const;

  const ExpansionEngine& engine() const { return *eng_; }
  const CutoffF& cutoff() const { return *cut_; }

 private:
  const ExpansionEngine* eng_;
  const CutoffF* cut_;
  double eps_;
  int N_;
  int max_deg_;

  // per-j electronic composition u_j(i) at one time node; mode 0: values,
  // 1: time derivative of the fields, 2: w derivative of the fields
  std::vector<Matrix> compose_node(long k, int mode) const;
};

}  // namespace hagprop
