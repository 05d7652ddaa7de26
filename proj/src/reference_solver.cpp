#include "hagprop/reference_solver.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>

namespace hagprop {

double GridState::norm() const {
  double acc = 0;
  for (const auto& z : v) acc += std::norm(z);
  return std::sqrt(acc * grid.dx);
}

double error_norm(const GridState& x, const GridState& y) {
  if (!(x.grid == y.grid) || x.nel != y.nel)
    throw std::invalid_argument("error_norm: grid mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < x.v.size(); ++i) acc += std::norm(x.v[i] - y.v[i]);
  return std::sqrt(acc * x.grid.dx);
}

void write_grid_state(const GridState& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out.write("HGST0001", 8);
  std::int64_t d = 1, nel = s.nel, n = s.grid.n;
  out.write(reinterpret_cast<const char*>(&d), 8);
  out.write(reinterpret_cast<const char*>(&nel), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  double hdr[4] = {s.grid.x_min, s.grid.dx, s.t, s.eps};
  out.write(reinterpret_cast<const char*>(hdr), 32);
  out.write(reinterpret_cast<const char*>(s.v.data()), s.v.size() * sizeof(Complex));
}

GridState read_grid_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open grid state file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "HGST0001", 8) != 0)
    throw std::runtime_error("bad grid state magic in " + path);
  std::int64_t d, nel, n;
  in.read(reinterpret_cast<char*>(&d), 8);
  in.read(reinterpret_cast<char*>(&nel), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  double hdr[4];
  in.read(reinterpret_cast<char*>(hdr), 32);
  GridState s;
  s.grid = {hdr[0], hdr[1], n};
  s.nel = static_cast<int>(nel);
  s.t = hdr[2];
  s.eps = hdr[3];
  s.resize();
  in.read(reinterpret_cast<char*>(s.v.data()), s.v.size() * sizeof(Complex));
  return s;
}

namespace {
std::mutex fftw_plan_mutex;
}

struct SplitOperatorSolver::Impl {
  fftw_plan fwd = nullptr, bwd = nullptr;
  fftw_complex* buf = nullptr;
  std::vector<double> k2;                 // k^2 in FFT order
  std::vector<Matrix> pot_evecs;          // per node
  std::vector<RealVector> pot_evals;      // per node
  std::vector<Matrix> half_step;          // cached exp(-i dt h / (2 eps^2))
  double cached_dt_half = -1.0;
};

SplitOperatorSolver::SplitOperatorSolver(const ElectronicModel& model, const XGrid& grid,
                                         double eps)
    : model_(&model), grid_(grid), eps_(eps), nel_(model.n_el()), impl_(new Impl) {
  if ((grid.n & (grid.n - 1)) != 0)
    throw ResolutionError("solver grid node count must be a power of two");
  const long n = grid.n;
  impl_->buf = fftw_alloc_complex(static_cast<std::size_t>(n) * nel_);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    int nn = static_cast<int>(n);
    impl_->fwd = fftw_plan_many_dft(1, &nn, nel_, impl_->buf, nullptr, nel_, 1, impl_->buf,
                                    nullptr, nel_, 1, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_many_dft(1, &nn, nel_, impl_->buf, nullptr, nel_, 1, impl_->buf,
                                    nullptr, nel_, 1, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  impl_->k2.resize(n);
  const double dk = 2.0 * std::numbers::pi / grid.length();
  for (long i = 0; i < n; ++i) {
    long f = (i <= n / 2) ? i : i - n;
    impl_->k2[i] = (dk * f) * (dk * f);
  }
  impl_->pot_evecs.resize(n);
  impl_->pot_evals.resize(n);
  for (long i = 0; i < n; ++i) {
    Matrix H = model.h(grid.node(i));
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    impl_->pot_evecs[i] = es.eigenvectors();
    impl_->pot_evals[i] = es.eigenvalues();
  }
}

SplitOperatorSolver::~SplitOperatorSolver() {
  std::lock_guard<std::mutex> lock(fftw_plan_mutex);
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
  if (impl_->buf) fftw_free(impl_->buf);
}

void SplitOperatorSolver::check_resolution(const Trajectory& traj, double b1,
                                           int max_degree) const {
  double normB_max = 0, normA_max = 0, a_lo = 1e300, a_hi = -1e300, eta_max = 0;
  for (const auto& s : traj.samples()) {
    Eigen::JacobiSVD<Matrix> svB(s.params.B), svA(s.params.A);
    normB_max = std::max(normB_max, svB.singularValues()(0));
    normA_max = std::max(normA_max, svA.singularValues()(0));
    a_lo = std::min(a_lo, s.params.a(0));
    a_hi = std::max(a_hi, s.params.a(0));
    eta_max = std::max(eta_max, std::abs(s.params.eta(0)));
  }
  if (grid_.dx > eps_ / (4.0 * normB_max))
    throw ResolutionError("solver grid spacing violates dx <= eps/(4 ||B||)");
  double spread = 10.0 * std::sqrt(eps_) * normA_max;
  if (grid_.x_min > a_lo - spread || grid_.x_min + grid_.length() < a_hi + spread)
    throw ResolutionError("solver box does not contain a(t) +- 10 sqrt(eps) ||A||");
  // momentum content of the highest occupied packet must fit under k_max
  double k_need =
      (eta_max + 1.5 * eps_ * normB_max * std::sqrt(2.0 * max_degree + 1.0)) / (eps_ * eps_);
  double k_max = std::numbers::pi / grid_.dx;
  if (k_need > 0.9 * k_max)
    throw ResolutionError("solver grid cannot represent the packet momentum content");
  if (grid_.x_min + grid_.length() < a_hi + b1 || grid_.x_min > a_lo - b1)
    throw ResolutionError("solver box smaller than the cutoff support");
}

void SplitOperatorSolver::ensure_potential_cache(double dt_half) {
  if (impl_->cached_dt_half == dt_half) return;
  const long n = grid_.n;
  impl_->half_step.assign(n, Matrix());
  for (long i = 0; i < n; ++i) {
    Vector ph(nel_);
    for (int e = 0; e < nel_; ++e)
      ph(e) = std::exp(Complex(0, -dt_half * impl_->pot_evals[i](e) / (eps_ * eps_)));
    impl_->half_step[i] =
        impl_->pot_evecs[i] * ph.asDiagonal() * impl_->pot_evecs[i].adjoint();
  }
  impl_->cached_dt_half = dt_half;
}

GridState SplitOperatorSolver::propagate(const GridState& psi0, double T, double dt) {
  if (!(psi0.grid == grid_)) throw std::invalid_argument("propagate: grid mismatch");
  const long n = grid_.n;
  const long nsteps = std::lround(T / dt);
  if (nsteps < 1) throw std::invalid_argument("propagate: T/dt < 1");
  const double h = T / nsteps;
  ensure_potential_cache(0.5 * h);

  auto* buf = reinterpret_cast<Complex*>(impl_->buf);
  std::memcpy(buf, psi0.v.data(), sizeof(Complex) * psi0.v.size());

  std::vector<Complex> kin(n);
  for (long i = 0; i < n; ++i)
    kin[i] = std::exp(Complex(0, -h * eps_ * eps_ * impl_->k2[i] / 2.0)) / double(n);

  Vector tmp(nel_);
  auto pot_half = [&] {
    for (long i = 0; i < n; ++i) {
      const Matrix& U = impl_->half_step[i];
      for (int e = 0; e < nel_; ++e) tmp(e) = buf[i * nel_ + e];
      for (int e = 0; e < nel_; ++e) {
        Complex acc = 0;
        for (int f = 0; f < nel_; ++f) acc += U(e, f) * tmp(f);
        buf[i * nel_ + e] = acc;
      }
    }
  };
  auto kinetic_full = [&] {
    fftw_execute(impl_->fwd);
    for (long i = 0; i < n; ++i)
      for (int e = 0; e < nel_; ++e) buf[i * nel_ + e] *= kin[i];
    fftw_execute(impl_->bwd);
  };

  for (long s = 0; s < nsteps; ++s) {
    pot_half();
    kinetic_full();
    pot_half();
  }

  GridState out = psi0;
  out.t = psi0.t + T;
  std::memcpy(out.v.data(), buf, sizeof(Complex) * out.v.size());

  const double drift = std::abs(out.norm() - psi0.norm());
  if (drift > 1e-8 * std::max(1.0, psi0.norm()))
    throw std::runtime_error("split-operator norm drift above tolerance");
  return out;
}

SplitOperatorSolver::FloorResult SplitOperatorSolver::propagate_with_floor(const GridState& psi0,
                                                                           double T, double dt0,
                                                                           double tol,
                                                                           int max_halvings) {
  GridState coarse = propagate(psi0, T, dt0);
  double dt = dt0;
  for (int it = 0; it < max_halvings; ++it) {
    GridState fine = propagate(psi0, T, dt / 2);
    double diff = error_norm(coarse, fine);
    if (diff <= tol) return {std::move(fine), diff, dt / 2};
    coarse = std::move(fine);
    dt /= 2;
  }
  GridState fine = propagate(psi0, T, dt / 2);
  double diff = error_norm(coarse, fine);
  return {std::move(fine), diff, dt / 2};
}

GridState SplitOperatorSolver::apply_H(const GridState& psi) const {
  if (!(psi.grid == grid_)) throw std::invalid_argument("apply_H: grid mismatch");
  const long n = grid_.n;
  auto* buf = reinterpret_cast<Complex*>(impl_->buf);
  std::memcpy(buf, psi.v.data(), sizeof(Complex) * psi.v.size());
  fftw_execute(impl_->fwd);
  const double c = 0.5 * eps_ * eps_ * eps_ * eps_;
  for (long i = 0; i < n; ++i)
    for (int e = 0; e < nel_; ++e) buf[i * nel_ + e] *= c * impl_->k2[i] / double(n);
  fftw_execute(impl_->bwd);

  GridState out = psi;
  std::memcpy(out.v.data(), buf, sizeof(Complex) * out.v.size());
  Vector tmp(nel_);
  for (long i = 0; i < n; ++i) {
    const Matrix& V = impl_->pot_evecs[i];
    const RealVector& ev = impl_->pot_evals[i];
    for (int e = 0; e < nel_; ++e) tmp(e) = psi.at(i, e);
    Vector hv = V * (ev.cast<Complex>().asDiagonal() * (V.adjoint() * tmp));
    for (int e = 0; e < nel_; ++e) out.at(i, e) += hv(e);
  }
  return out;
}

double duhamel_residual_at_node(const Ansatz& ansatz, const SplitOperatorSolver& solver,
                                long k) {
  GridState dpsi = ansatz.evaluate_dt_at_node(k, solver.grid());
  GridState psi = ansatz.evaluate(ansatz.engine().settings().tgrid.node(k), solver.grid());
  GridState hpsi = solver.apply_H(psi);
  const Complex ie2(0, ansatz.eps() * ansatz.eps());
  double acc = 0;
  for (std::size_t i = 0; i < dpsi.v.size(); ++i) acc += std::norm(ie2 * dpsi.v[i] - hpsi.v[i]);
  return std::sqrt(acc * solver.grid().dx);
}

DuhamelReport duhamel_scan(const Ansatz& ansatz, const SplitOperatorSolver& solver, int n_probe) {
  const auto& tg = ansatz.engine().settings().tgrid;
  if (n_probe < 3) n_probe = 3;
  if (n_probe % 2 == 0) ++n_probe;
  DuhamelReport rep;
  std::vector<double> vals(n_probe);
  std::vector<long> nodes(n_probe);
  for (int p = 0; p < n_probe; ++p) {
    long k = std::lround(static_cast<double>(p) * (tg.n - 1) / (n_probe - 1));
    nodes[p] = k;
    vals[p] = duhamel_residual_at_node(ansatz, solver, k);
    rep.xi.emplace_back(tg.node(k), vals[p]);
  }
  // composite Simpson over the probe grid
  const double hp = tg.T / (n_probe - 1);
  double integral = 0;
  for (int p = 0; p + 2 < n_probe; p += 2)
    integral += hp / 3.0 * (vals[p] + 4.0 * vals[p + 1] + vals[p + 2]);
  rep.bound = integral / (ansatz.eps() * ansatz.eps());
  return rep;
}

}  // namespace hagprop
