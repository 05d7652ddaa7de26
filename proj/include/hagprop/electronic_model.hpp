#pragma once

#include <memory>
#include <string>

#include "hagprop/classical_flow.hpp"
#include "hagprop/wavepacket.hpp"

namespace hagprop {

struct GapCollapseError : std::runtime_error {
  double X, gap;
  GapCollapseError(double X_, double g)
      : std::runtime_error("electronic gap below threshold"), X(X_), gap(g) {}
};

// Finite-dimensional analytic electron Hamiltonian h(X) on a 1-d nuclear
// coordinate, with an isolated selected level E(X), a globally smooth
// eigenvector section phi(X) (gauge fixed per model), and the reduced
// resolvent r(X) = [h-E]^{-1} restricted to the orthogonal complement.
//
// Analytic catalog models override the spectral pieces in closed form; the
// base class supplies dense-eigensolve plus finite-difference fallbacks
// (4th-order stencils on an internal gauge cache).
class ElectronicModel {
 public:
  virtual ~ElectronicModel() = default;

  virtual std::string name() const = 0;
  virtual int n_el() const = 0;
  virtual int level() const { return 0; }
  virtual Matrix h(double X) const = 0;

  double xi_min = -1e30, xi_max = 1e30;  // validity region
  double gap_threshold = 1e-6;

  bool inside(double X) const { return X > xi_min && X < xi_max; }

  // selected eigenvalue and derivatives
  virtual double E(double X) const;
  virtual double dE(double X) const;
  virtual double d2E(double X) const;
  // Taylor coefficient D^m E(a) / m!
  virtual double taylor_coeff(double a, int m) const;
  virtual int max_taylor_order() const { return m_taylor_max_; }
  void set_max_taylor_order(int m) { m_taylor_max_ = m; }

  // smooth eigenvector section and its X-derivatives
  virtual Vector phi(double X) const;
  virtual Vector dphi(double X) const;
  virtual Vector d2phi(double X) const;
  // mu = Im <phi, phi'> and derivatives (Berry connection of the section)
  virtual double mu(double X) const;
  virtual double dmu(double X) const;
  virtual double d2mu(double X) const;
  // true when mu vanishes identically (real symmetric / diagonal models)
  virtual bool trivial_connection() const { return false; }

  // full eigensystem, ascending eigenvalues
  virtual void eigensystem(double X, RealVector& evals, Matrix& evecs) const;

  double gap(double X) const;
  // r(X) P_perp v; throws GapCollapseError near degeneracy
  Vector resolvent_apply(double X, const Vector& v) const;
  Vector pperp_apply(double X, const Vector& v) const;

  // Generic models need the gauge cache prepared over the X range the run
  // will touch; analytic models ignore this.
  virtual void prepare_gauge(double, double) const {}

 protected:
  int m_taylor_max_ = 12;
};

// pointwise spectral data, phase-arbitrary eigenvector
struct SpectralPoint {
  double E;
  Vector phi_raw;
  Matrix P_perp;
  double gap;
};
SpectralPoint spectral(const ElectronicModel& model, double X);

// flow-facing view of the selected level
Potential potential_of(const ElectronicModel& model);

// --- catalog ---------------------------------------------------------------

// h = diag(omega^2 X^2/2, omega^2 X^2/2 + gap0): constant eigenvectors,
// harmonic selected level, every expansion source vanishes.
std::unique_ptr<ElectronicModel> make_trivial_adiabatic(double omega = 1.0, double gap0 = 1.0);

// h = [[X, delta], [delta, -X]] + (omega^2 X^2/2) I, lower level; real
// symmetric so the real eigenvector section already satisfies the phase
// condition.
std::unique_ptr<ElectronicModel> make_avoided_crossing(double delta = 0.5, double omega = 1.6);

// h = [[X, delta + i kappa X], [delta - i kappa X, -X]] + (omega^2 X^2/2) I:
// complex coupling, exercises nontrivial phase fixing through the generic
// gauge-cache path.
std::unique_ptr<ElectronicModel> make_complex_coupling(double delta = 0.5, double kappa = 0.4,
                                                       double omega = 1.6);

// h = diag(omega^2 X^2/2, +g1, +g2) relative offsets: componentwise resolvent.
std::unique_ptr<ElectronicModel> make_three_level(double omega = 1.0, double g1 = 1.0,
                                                  double g2 = 2.5);

std::unique_ptr<ElectronicModel> make_model(const std::string& id, double delta, double omega,
                                            double kappa, int level);

// Finite-difference weights for the m-th derivative on an arbitrary stencil
// (Fornberg), used by the generic fallbacks and by tests.
std::vector<double> fd_weights(double x0, const std::vector<double>& grid, int m);

}  // namespace hagprop
