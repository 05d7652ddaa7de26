#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hagprop/wavepacket.hpp"

namespace hagprop {

// Effective potential interface the flow integrates on: E, grad E, Hessian,
// and the validity region.
struct Potential {
  std::function<double(const RealVector&)> E;
  std::function<RealVector(const RealVector&)> gradE;
  std::function<RealMatrix(const RealVector&)> hessE;
  std::function<bool(const RealVector&)> inside;  // validity region Xi
};

struct FlowState {
  double t = 0.0;
  WavepacketParams params;
};

struct FlowDerivative {
  RealVector da, deta;
  Matrix dA, dB;
  double dS;
};

// (da, deta, dA, dB, dS) = (eta, -grad E(a), iB, i Hess E(a) A, eta^2/2 - E(a)).
// Throws RegionExitError if a lies outside the validity region.
FlowDerivative rhs(const FlowState& state, const Potential& pot);

struct RegionExitError : std::runtime_error {
  double t_exit;
  explicit RegionExitError(double t)
      : std::runtime_error("trajectory left the validity region"), t_exit(t) {}
};

struct InvariantBlowupError : std::runtime_error {
  double t_fail, defect;
  InvariantBlowupError(double t, double d)
      : std::runtime_error("compatibility invariants drifted above 1e-6"), t_fail(t), defect(d) {}
};

// Sample of the dense trajectory; f-values kept for Hermite interpolation.
struct TrajectorySample {
  double t;
  WavepacketParams params;
  FlowDerivative deriv;
  double cond1_defect;
};

class Trajectory {
 public:
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  double t_begin() const { return samples_.front().t; }
  double t_end() const { return samples_.back().t; }

  // Cubic Hermite dense output of a, eta, A, B, S; (det A)^{-1/2} branch
  // carried along continuously.
  WavepacketParams at(double t) const;
  RealVector a_at(double t) const;
  RealVector eta_at(double t) const;
  double max_cond1_defect() const;

  void append(TrajectorySample s) { samples_.push_back(std::move(s)); }
  void write_csv(const std::string& path) const;

 private:
  std::vector<TrajectorySample> samples_;
};

// Fixed-step RK4 over [t0, t0+T]; samples at every multiple of dt plus the
// endpoint.  Compatibility defects are monitored (not re-projected): drift
// above 1e-6 aborts, region exit is located by bisection to 1e-10 in time.
Trajectory propagate(const FlowState& state0, double T, double dt, const Potential& pot);

// Recombines finite-difference Jacobians of the (a, eta) flow as
// A(t) ~ (da/da0) A(0) + i (da/deta0) B(0) and the B analog; returns the
// largest deviation along the trajectory endpoints requested.
double linearization_check(const FlowState& state0, double T, double dt, const Potential& pot,
                           double fd_step = 1e-4);

// Energy eta^2/2 + E(a) at a sample.
double energy(const TrajectorySample& s, const Potential& pot);

}  // namespace hagprop
