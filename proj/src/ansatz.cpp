#include "hagprop/ansatz.hpp"

#include <cmath>

namespace hagprop {

namespace {
double bump(double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; }
double dbump(double u) { return u > 0 ? std::exp(-1.0 / u) / (u * u) : 0.0; }
}  // namespace

CutoffF::CutoffF(double b0, double b1) : b0_(b0), b1_(b1) {
  if (!(0 < b0 && b0 < b1)) throw std::invalid_argument("CutoffF: need 0 < b0 < b1");
}

double CutoffF::operator()(double w) const {
  double r = std::abs(w);
  if (r <= b0_) return 1.0;
  if (r >= b1_) return 0.0;
  double u = (r - b0_) / (b1_ - b0_);
  double p = bump(u), q = bump(1.0 - u);
  return q / (p + q);
}

double CutoffF::derivative(double w) const {
  double r = std::abs(w);
  if (r <= b0_ || r >= b1_) return 0.0;
  double u = (r - b0_) / (b1_ - b0_);
  double p = bump(u), q = bump(1.0 - u);
  double dp = dbump(u), dq = -dbump(1.0 - u);
  double ds = (dq * (p + q) - q * (dp + dq)) / ((p + q) * (p + q));
  return ds / (b1_ - b0_) * (w < 0 ? -1.0 : 1.0);
}

Ansatz::Ansatz(const ExpansionEngine& engine, const CutoffF& cutoff, double eps, int N)
    : eng_(&engine), cut_(&cutoff), eps_(eps), N_(N) {
  if (N < 0 || N > engine.N())
    throw std::invalid_argument("Ansatz: order exceeds the computed expansion");
  max_deg_ = ExpansionEngine::c_degree(engine.J(), N);
}

// u[j] is an (n_w x nel) matrix of the electronic composition at time node k.
std::vector<Matrix> Ansatz::compose_node(long k, int mode) const {
  const auto& sf = eng_->spectral_field();
  const long nw = eng_->settings().wgrid.n;
  const int nel = sf.n_el();
  std::vector<Matrix> u(max_deg_ + 1, Matrix::Zero(nw, nel));

  auto field_val = [&](const CoefficientField& f, long j, long i, int e) -> Complex {
    switch (mode) {
      case 1: {
        Stencil s = d1_stencil(k, f.n_t, eng_->settings().tgrid.h);
        return s.apply([&](long q) { return f.at(q, j, i, e); });
      }
      case 2: {
        Stencil s = d1_stencil(i, f.n_w, eng_->settings().wgrid.h);
        return s.apply([&](long q) { return f.at(k, j, q, e); });
      }
      default:
        return f.at(k, j, i, e);
    }
  };

  for (int n = 0; n <= N_; ++n) {
    const CoefficientField& cf = eng_->c(n);
    const double en = std::pow(eps_, n);
    for (long j = 0; j < cf.n_j; ++j)
      for (long i = 0; i < nw; ++i) {
        if (mode == 0) {
          u[j].row(i) += en * cf.at(k, j, i) * sf.Phi(k, i).transpose();
        } else if (mode == 1) {
          // d/dt (c Phi) = c_dot Phi + c dPhi_t
          u[j].row(i) += en * (field_val(cf, j, i, 0) * sf.Phi(k, i).transpose() +
                               cf.at(k, j, i) * sf.dPhi_t(k, i).transpose());
        } else {
          u[j].row(i) += en * (field_val(cf, j, i, 0) * sf.Phi(k, i).transpose() +
                               cf.at(k, j, i) * sf.dPhi_w(k, i).transpose());
        }
      }
  }
  for (int n = 2; n <= N_ + 2; ++n) {
    if (!eng_->has_d(n)) continue;
    const CoefficientField& df = eng_->d(n);
    const double en = std::pow(eps_, n);
    for (long j = 0; j < df.n_j && j <= max_deg_; ++j)
      for (long i = 0; i < nw; ++i)
        for (int e = 0; e < nel; ++e) u[j](i, e) += en * field_val(df, j, i, e);
  }
  return u;
}

GridState Ansatz::evaluate(double t, const XGrid& grid) const {
  const auto& sf = eng_->spectral_field();
  const auto& tg = eng_->settings().tgrid;
  const auto& wg = eng_->settings().wgrid;
  const int nel = sf.n_el();
  if (t < -1e-12 || t > tg.T + 1e-12) throw std::invalid_argument("Ansatz: t outside trajectory");

  long k0;
  std::array<double, 4> wt;
  cubic_interp_weights(t / tg.h, tg.n, k0, wt);

  std::vector<Matrix> u(max_deg_ + 1, Matrix::Zero(wg.n, nel));
  for (int m = 0; m < 4; ++m) {
    if (wt[m] == 0.0 && m > 0) continue;
    std::vector<Matrix> um = compose_node(k0 + m, 0);
    for (int j = 0; j <= max_deg_; ++j) u[j] += wt[m] * um[j];
  }

  WavepacketParams p = eng_->trajectory().at(t);
  WavepacketParams pe = p;
  pe.hbar = eps_ * eps_;
  Eigen::MatrixXd X(grid.n, 1);
  for (long g = 0; g < grid.n; ++g) X(g, 0) = grid.node(g);
  BasisBlock basis(pe, X, max_deg_);
  const Complex phase = std::exp(Complex(0, p.S / (eps_ * eps_)));

  GridState out;
  out.grid = grid;
  out.nel = nel;
  out.t = t;
  out.eps = eps_;
  out.resize();
  const double a = p.a(0);
  for (long g = 0; g < grid.n; ++g) {
    double w = grid.node(g) - a;
    if (std::abs(w) >= cut_->b1()) continue;
    double F = (*cut_)(w);
    if (F == 0.0) continue;
    long i0;
    std::array<double, 4> ww;
    cubic_interp_weights((w + wg.half_width) / wg.h, wg.n, i0, ww);
    for (int e = 0; e < nel; ++e) {
      Complex acc = 0;
      for (int j = 0; j <= max_deg_; ++j) {
        Complex field = 0;
        for (int q = 0; q < 4; ++q) field += ww[q] * u[j](i0 + q, e);
        acc += basis.values()(g, j) * field;
      }
      out.at(g, e) = F * phase * acc;
    }
  }
  return out;
}

GridState Ansatz::evaluate_dt_at_node(long k, const XGrid& grid) const {
  const auto& sf = eng_->spectral_field();
  const auto& tg = eng_->settings().tgrid;
  const auto& wg = eng_->settings().wgrid;
  const int nel = sf.n_el();
  const double t = tg.node(k);

  std::vector<Matrix> u = compose_node(k, 0);
  std::vector<Matrix> ut = compose_node(k, 1);
  std::vector<Matrix> uw = compose_node(k, 2);

  WavepacketParams p = eng_->trajectory().at(t);
  WavepacketParams pe = p;
  pe.hbar = eps_ * eps_;

  // in-basis generator K of the packet motion:
  // i hbar d/dt B_j = (-hbar^2/2 Lap + W_a) B_j, W_a the second-order Taylor
  const int deg_ext = max_deg_ + 2;
  MultiIndexTable tbl(1, deg_ext + 2);
  Matrix D1 = derivative_step_matrix(pe, tbl, 0);
  Matrix W1 = position_step_matrix(pe, tbl, 0);
  const double E0 = eng_->spectral_field().model().E(p.a(0));
  const double E1 = eng_->spectral_field().model().dE(p.a(0));
  const double E2 = eng_->spectral_field().model().d2E(p.a(0));
  Matrix H = -0.5 * pe.hbar * pe.hbar * (D1 * D1) + E1 * W1 + 0.5 * E2 * (W1 * W1);
  H += E0 * Matrix::Identity(tbl.size(), tbl.size());
  Matrix K = (Complex(0, -1) / pe.hbar) * H.topLeftCorner(deg_ext + 1, deg_ext + 1);

  // utilde_q = sum_j K_{qj} u_j  (component-wise over the w grid)
  std::vector<Matrix> util(deg_ext + 1, Matrix::Zero(wg.n, nel));
  for (int q = 0; q <= deg_ext; ++q)
    for (int j = 0; j <= max_deg_; ++j) {
      Complex kqj = K(q, j);
      if (kqj != Complex(0, 0)) util[q] += kqj * u[j];
    }

  Eigen::MatrixXd X(grid.n, 1);
  for (long g = 0; g < grid.n; ++g) X(g, 0) = grid.node(g);
  BasisBlock basis(pe, X, deg_ext);
  const Complex phase = std::exp(Complex(0, p.S / (eps_ * eps_)));
  const double a = p.a(0), adot = p.eta(0);

  GridState out;
  out.grid = grid;
  out.nel = nel;
  out.t = t;
  out.eps = eps_;
  out.resize();
  for (long g = 0; g < grid.n; ++g) {
    double w = grid.node(g) - a;
    if (std::abs(w) >= cut_->b1()) continue;
    double F = (*cut_)(w);
    double dF = cut_->derivative(w);
    if (F == 0.0 && dF == 0.0) continue;
    long i0;
    std::array<double, 4> ww;
    cubic_interp_weights((w + wg.half_width) / wg.h, wg.n, i0, ww);
    auto interp = [&](const Matrix& f, int e) {
      Complex acc = 0;
      for (int q = 0; q < 4; ++q) acc += ww[q] * f(i0 + q, e);
      return acc;
    };
    for (int e = 0; e < nel; ++e) {
      Complex acc = 0;
      for (int j = 0; j <= deg_ext; ++j) {
        Complex val = 0;
        if (j <= max_deg_) {
          // F (du/dt - adot du/dw) + dF-term, plus the in-basis packet motion
          val += F * (interp(ut[j], e) - adot * interp(uw[j], e));
          val -= adot * dF * interp(u[j], e);
        }
        val += F * interp(util[j], e);
        acc += basis.values()(g, j) * val;
      }
      out.at(g, e) = phase * acc;
    }
  }
  return out;
}

double Ansatz::localization_mass(double t, double b, const XGrid& grid) const {
  GridState s = evaluate(t, grid);
  const double a = eng_->trajectory().at(t).a(0);
  double acc = 0;
  for (long g = 0; g < grid.n; ++g) {
    if (std::abs(grid.node(g) - a) <= b) continue;
    for (int e = 0; e < s.nel; ++e) acc += std::norm(s.at(g, e));
  }
  return std::sqrt(acc * grid.dx);
}

}  // namespace hagprop
