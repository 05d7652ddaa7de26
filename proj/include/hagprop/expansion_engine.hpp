#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hagprop/classical_flow.hpp"
#include "hagprop/electronic_model.hpp"
#include "hagprop/grids.hpp"
#include "hagprop/multiindex.hpp"
#include "hagprop/wavepacket.hpp"

namespace hagprop {

// One expansion order sampled on (time grid) x (index table prefix) x (w grid):
// scalar fields c_{n,j}(w,t) or electronic-vector fields d_{n,j}(w,t).
// Layout: v[((k*n_j + j)*n_w + i)*n_el + e].
struct CoefficientField {
  int order = 0;
  int n_el = 1;  // 1 for c-fields
  long n_t = 0, n_j = 0, n_w = 0;
  std::vector<Complex> v;

  void resize(long nt, long nj, long nw, int nel) {
    n_t = nt;
    n_j = nj;
    n_w = nw;
    n_el = nel;
    v.assign(static_cast<std::size_t>(nt) * nj * nw * nel, Complex(0, 0));
  }
  Complex& at(long k, long j, long i, int e = 0) {
    return v[(static_cast<std::size_t>(k) * n_j + j) * n_w * n_el + i * n_el + e];
  }
  Complex at(long k, long j, long i, int e = 0) const {
    return v[(static_cast<std::size_t>(k) * n_j + j) * n_w * n_el + i * n_el + e];
  }
};

// Electronic spectral data sampled on the (t, w) lattice in the phase-fixed
// gauge <Phi, dPhi/dt> = 0.
class SpectralField {
 public:
  SpectralField(const ElectronicModel& model, const Trajectory& traj, const WGrid& wg,
                const TimeGrid& tg);

  const ElectronicModel& model() const { return *model_; }
  const WGrid& wgrid() const { return wg_; }
  const TimeGrid& tgrid() const { return tg_; }
  int n_el() const { return nel_; }
  double min_gap() const { return min_gap_; }

  const Vector& Phi(long k, long i) const { return Phi_[idx(k, i)]; }
  const Vector& dPhi_t(long k, long i) const { return dPhi_t_[idx(k, i)]; }
  const Vector& dPhi_w(long k, long i) const { return dPhi_w_[idx(k, i)]; }
  const Vector& d2Phi_w(long k, long i) const { return d2Phi_w_[idx(k, i)]; }
  Complex conn1(long k, long i) const { return conn1_[idx(k, i)]; }  // <Phi, dPhi_w>
  Complex conn2(long k, long i) const { return conn2_[idx(k, i)]; }  // <Phi, d2Phi_w>
  double E(long k, long i) const { return evals_[idx(k, i)](model_->level()); }
  double theta(long k, long i) const { return theta_[idx(k, i)]; }

  Vector resolvent(long k, long i, const Vector& v) const;
  Vector pperp(long k, long i, const Vector& v) const;
  // (h - E) v through the cached eigensystem
  Vector h_minus_E(long k, long i, const Vector& v) const;

  double a_of_t(long k) const { return a_[k]; }
  double adot_of_t(long k) const { return adot_[k]; }

 private:
  std::size_t idx(long k, long i) const { return static_cast<std::size_t>(k) * wg_.n + i; }
  const ElectronicModel* model_;
  WGrid wg_;
  TimeGrid tg_;
  int nel_;
  double min_gap_ = 1e300;
  std::vector<double> a_, adot_;
  std::vector<Vector> Phi_, dPhi_t_, dPhi_w_, d2Phi_w_;
  std::vector<Complex> conn1_, conn2_;
  std::vector<double> theta_;
  std::vector<RealVector> evals_;
  std::vector<Matrix> evecs_;
};

struct EngineSettings {
  int J = 0;                  // initial data degree
  std::vector<Complex> c0;    // coefficients for j = 0..J, sum |c|^2 = 1
  int N = 6;                  // compute fields c_0..c_N and d_2..d_{N+2}
  double b1 = 0;              // cutoff outer radius (interior mask for checks)
  WGrid wgrid;
  TimeGrid tgrid;
};

// The multiple-scales recursion: order by order, d_n from the perpendicular
// component equation and c_n by time integration of the parallel one.
class ExpansionEngine {
 public:
  ExpansionEngine(const ElectronicModel& model, const Trajectory& traj, EngineSettings settings);

  void compute();  // runs all orders up to settings.N (+2 for d)

  int N() const { return set_.N; }
  int J() const { return set_.J; }
  const EngineSettings& settings() const { return set_; }
  const SpectralField& spectral_field() const { return *sf_; }
  const Trajectory& trajectory() const { return *traj_; }

  // c_n defined for 0 <= n <= N; d_n for 2 <= n <= N+2 (lower orders zero)
  const CoefficientField& c(int n) const;
  const CoefficientField& d(int n) const;
  bool has_c(int n) const { return n >= 0 && n <= set_.N; }
  bool has_d(int n) const { return n >= 2 && n <= set_.N + 2; }
  static int c_degree(int J, int n) { return J + 3 * n; }
  static int d_degree(int J, int n) { return J + 3 * (n - 2); }

  // defect diagnostics (max over interior nodes)
  double residual_parallel(int n) const;       // |i c_dot - sum Gamma|
  double residual_perpendicular(int n) const;  // |(h-E) d_n - RHS|
  double orthogonality_defect(int n) const;    // max |<Phi, d_n>|
  double phase_condition_defect() const;       // max |<Phi, dPhi/dt>| via grid FD

  struct GrowthReport {
    std::vector<double> s;  // sup_{w,t} ||c_n||_{l2(j)} per order
    double tau = 0.0;       // fitted growth rate in s_n ~ C (tau sqrt n)^n
    double logC = 0.0;
  };
  GrowthReport growth_report() const;

  void dump_fields(const std::string& path) const;

 private:
  const ElectronicModel* model_;
  const Trajectory* traj_;
  EngineSettings set_;
  std::unique_ptr<SpectralField> sf_;
  std::vector<CoefficientField> c_, d_;
  std::vector<std::vector<double>> taylor_;  // [k][m] = D^m E(a(t_k))/m!
  std::vector<Matrix> Ystep_, Dstep_;        // per t_k single-step matrices (big table)
  long n_big_ = 0, n_main_ = 0;

  void build_step_matrices();
  void compute_d_order(int n);
  void compute_c_order(int n);
  // Gamma-sum for order n into scratch (same layout as c_n)
  void assemble_gamma(int n, CoefficientField& out) const;
  // RHS of the perpendicular equation (before resolvent) for (n, k, j, i)
  Vector perp_rhs(int n, long k, long j, long i, const std::vector<Matrix>& Ypow) const;
  std::vector<Matrix> y_powers(long k, int mmax) const;
  bool interior_w(long i) const;

  // time-FD of a stored field component
  Complex dot_field(const CoefficientField& f, long k, long j, long i, int e) const;
  Complex dw1_field(const CoefficientField& f, long k, long j, long i, int e) const;
  Complex dw2_field(const CoefficientField& f, long k, long j, long i, int e) const;
};

}  // namespace hagprop
