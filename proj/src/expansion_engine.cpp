#include "hagprop/expansion_engine.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hagprop {

namespace {
// 4-point Gauss-Legendre on [0,1]
constexpr double kGLx[4] = {0.069431844202973712, 0.330009478207571868, 0.669990521792428132,
                            0.930568155797026288};
constexpr double kGLw[4] = {0.173927422568726929, 0.326072577431273071, 0.326072577431273071,
                            0.173927422568726929};
}  // namespace

SpectralField::SpectralField(const ElectronicModel& model, const Trajectory& traj,
                             const WGrid& wg, const TimeGrid& tg)
    : model_(&model), wg_(wg), tg_(tg), nel_(model.n_el()) {
  const long nt = tg.n, nw = wg.n;
  a_.resize(nt);
  adot_.resize(nt);
  double a_lo = 1e300, a_hi = -1e300;
  for (long k = 0; k < nt; ++k) {
    WavepacketParams p = traj.at(tg.node(k));
    a_[k] = p.a(0);
    adot_[k] = p.eta(0);
    a_lo = std::min(a_lo, a_[k]);
    a_hi = std::max(a_hi, a_[k]);
  }
  model.prepare_gauge(a_lo - wg.half_width - 0.5, a_hi + wg.half_width + 0.5);

  const std::size_t total = static_cast<std::size_t>(nt) * nw;
  Phi_.resize(total);
  dPhi_t_.resize(total);
  dPhi_w_.resize(total);
  d2Phi_w_.resize(total);
  conn1_.resize(total);
  conn2_.resize(total);
  theta_.resize(total);
  evals_.resize(total);
  evecs_.resize(total);

  // theta(k, i) and its w-derivatives by cumulative Gauss-Legendre in t:
  // theta_dot = -adot * mu(a(t) + w)
  std::vector<double> th(nw, 0.0), gth(nw, 0.0), lth(nw, 0.0);
  const bool flat_gauge = model.trivial_connection();

  for (long k = 0; k < nt; ++k) {
    if (k > 0 && !flat_gauge) {
      const double t0 = tg.node(k - 1), h = tg.h;
      for (long i = 0; i < nw; ++i) {
        double acc = 0, gacc = 0, lacc = 0;
        for (int q = 0; q < 4; ++q) {
          double s = t0 + kGLx[q] * h;
          WavepacketParams p = traj.at(s);
          double X = p.a(0) + wg_.node(i);
          acc += kGLw[q] * p.eta(0) * model.mu(X);
          gacc += kGLw[q] * p.eta(0) * model.dmu(X);
          lacc += kGLw[q] * p.eta(0) * model.d2mu(X);
        }
        th[i] -= h * acc;
        gth[i] -= h * gacc;
        lth[i] -= h * lacc;
      }
    }
    for (long i = 0; i < nw; ++i) {
      const double X = a_[k] + wg_.node(i);
      const std::size_t id = idx(k, i);
      model.eigensystem(X, evals_[id], evecs_[id]);
      double g = 1e300;
      for (int l = 0; l < nel_; ++l)
        if (l != model.level()) g = std::min(g, std::abs(evals_[id](l) - evals_[id](model.level())));
      min_gap_ = std::min(min_gap_, g);
      if (g < model.gap_threshold) throw GapCollapseError(X, g);

      Vector pg = model.phi(X), dpg = model.dphi(X), d2pg = model.d2phi(X);
      double mu = flat_gauge ? 0.0 : model.mu(X);
      Complex ph = std::exp(Complex(0, th[i]));
      theta_[id] = th[i];
      Phi_[id] = ph * pg;
      dPhi_t_[id] = adot_[k] * ph * (dpg - Complex(0, mu) * pg);
      dPhi_w_[id] = ph * (dpg + Complex(0, gth[i]) * pg);
      d2Phi_w_[id] = ph * (d2pg + Complex(0, 2 * gth[i]) * dpg +
                           (Complex(0, lth[i]) - gth[i] * gth[i]) * pg);
      conn1_[id] = Phi_[id].dot(dPhi_w_[id]);
      conn2_[id] = Phi_[id].dot(d2Phi_w_[id]);
    }
  }
}

Vector SpectralField::resolvent(long k, long i, const Vector& v) const {
  const std::size_t id = idx(k, i);
  const int lv = model_->level();
  Vector out = Vector::Zero(nel_);
  for (int l = 0; l < nel_; ++l) {
    if (l == lv) continue;
    double de = evals_[id](l) - evals_[id](lv);
    out += evecs_[id].col(l) * (evecs_[id].col(l).dot(v) / de);
  }
  return out;
}

Vector SpectralField::pperp(long k, long i, const Vector& v) const {
  const std::size_t id = idx(k, i);
  return v - Phi_[id] * Phi_[id].dot(v);
}

Vector SpectralField::h_minus_E(long k, long i, const Vector& v) const {
  const std::size_t id = idx(k, i);
  const int lv = model_->level();
  Vector out = Vector::Zero(nel_);
  for (int l = 0; l < nel_; ++l) {
    double de = evals_[id](l) - evals_[id](lv);
    out += evecs_[id].col(l) * (de * evecs_[id].col(l).dot(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

ExpansionEngine::ExpansionEngine(const ElectronicModel& model, const Trajectory& traj,
                                 EngineSettings settings)
    : model_(&model), traj_(&traj), set_(std::move(settings)) {
  if (set_.wgrid.n % 2 == 0) throw std::invalid_argument("engine: w-grid node count must be odd");
  double norm = 0;
  for (auto& cj : set_.c0) norm += std::norm(cj);
  if (std::abs(norm - 1.0) > 1e-10)
    throw std::invalid_argument("engine: initial coefficients must satisfy sum |c0_j|^2 = 1");
  if (static_cast<int>(set_.c0.size()) != set_.J + 1)
    throw std::invalid_argument("engine: c0 must list coefficients for j = 0..J");
  if (model.max_taylor_order() < set_.N + 2)
    throw std::invalid_argument("engine: model Taylor order below N+2");
  sf_ = std::make_unique<SpectralField>(model, traj, set_.wgrid, set_.tgrid);
}

bool ExpansionEngine::interior_w(long i) const {
  return std::abs(set_.wgrid.node(i)) <= set_.b1 + 1e-12;
}

const CoefficientField& ExpansionEngine::c(int n) const {
  if (!has_c(n)) throw std::out_of_range("c(n): order not computed");
  return c_[n];
}
const CoefficientField& ExpansionEngine::d(int n) const {
  if (!has_d(n)) throw std::out_of_range("d(n): order not computed");
  return d_[n];
}

void ExpansionEngine::build_step_matrices() {
  const long nt = set_.tgrid.n;
  const int deg_main = c_degree(set_.J, set_.N + 2);
  const int deg_big = deg_main + set_.N + 2 + 1;
  n_main_ = deg_main + 1;
  n_big_ = deg_big + 1;
  MultiIndexTable big(1, deg_big);
  Ystep_.resize(nt);
  Dstep_.resize(nt);
  for (long k = 0; k < nt; ++k) {
    WavepacketParams p = traj_->at(set_.tgrid.node(k));
    WavepacketParams base;
    base.A = p.A;
    base.B = p.B;
    base.a = RealVector::Zero(1);
    base.eta = RealVector::Zero(1);
    base.hbar = 1.0;
    Ystep_[k] = position_step_matrix(base, big, 0);
    Dstep_[k] = derivative_step_matrix(base, big, 0);
  }
}

std::vector<Matrix> ExpansionEngine::y_powers(long k, int mmax) const {
  std::vector<Matrix> pow(mmax + 1);
  Matrix acc = Matrix::Identity(n_big_, n_big_);
  pow[0] = acc.topLeftCorner(n_main_, n_main_);
  for (int m = 1; m <= mmax; ++m) {
    acc = Ystep_[k] * acc;
    pow[m] = acc.topLeftCorner(n_main_, n_main_);
  }
  return pow;
}

void ExpansionEngine::compute() {
  const long nt = set_.tgrid.n, nw = set_.wgrid.n;

  build_step_matrices();

  taylor_.assign(nt, std::vector<double>(set_.N + 3, 0.0));
  for (long k = 0; k < nt; ++k)
    for (int m = 0; m <= set_.N + 2; ++m)
      taylor_[k][m] = model_->taylor_coeff(sf_->a_of_t(k), m);

  c_.assign(set_.N + 1, CoefficientField{});
  d_.assign(set_.N + 3, CoefficientField{});

  // order 0: constant in (w, t), equal to the initial coefficients
  c_[0].order = 0;
  c_[0].resize(nt, c_degree(set_.J, 0) + 1, nw, 1);
  for (long k = 0; k < nt; ++k)
    for (long j = 0; j <= set_.J; ++j)
      for (long i = 0; i < nw; ++i) c_[0].at(k, j, i) = set_.c0[j];

  for (int n = 1; n <= set_.N + 2; ++n) {
    if (n >= 2) compute_d_order(n);
    if (n <= set_.N) compute_c_order(n);
  }
}

Complex ExpansionEngine::dot_field(const CoefficientField& f, long k, long j, long i,
                                   int e) const {
  Stencil s = d1_stencil(k, f.n_t, set_.tgrid.h);
  return s.apply([&](long q) { return f.at(q, j, i, e); });
}

Complex ExpansionEngine::dw1_field(const CoefficientField& f, long k, long j, long i,
                                   int e) const {
  Stencil s = d1_stencil(i, f.n_w, set_.wgrid.h);
  return s.apply([&](long q) { return f.at(k, j, q, e); });
}

Complex ExpansionEngine::dw2_field(const CoefficientField& f, long k, long j, long i,
                                   int e) const {
  Stencil s = d2_stencil(i, f.n_w, set_.wgrid.h);
  return s.apply([&](long q) { return f.at(k, j, q, e); });
}

Vector ExpansionEngine::perp_rhs(int n, long k, long j, long i,
                                 const std::vector<Matrix>& Ypow) const {
  const int nel = sf_->n_el();
  Vector rhs = Vector::Zero(nel);
  const Complex I(0, 1);

  // i * d/dt of d_{n-2}
  if (has_d(n - 2) && j < d_[n - 2].n_j) {
    for (int e = 0; e < nel; ++e) rhs(e) += I * dot_field(d_[n - 2], k, j, i, e);
  }
  // - sum_{m>=3} (D^m E/m!) <phi_j, y^m phi_q> d_{n-m, q}
  for (int m = 3; m <= n - 2; ++m) {
    if (!has_d(n - m)) continue;
    const CoefficientField& dd = d_[n - m];
    const double tc = taylor_[k][m];
    if (tc == 0.0) continue;
    for (long q = std::max<long>(0, j - m); q < std::min<long>(dd.n_j, j + m + 1); ++q) {
      Complex y = Ypow[m](j, q);
      if (y == Complex(0, 0)) continue;
      for (int e = 0; e < nel; ++e) rhs(e) -= tc * y * dd.at(k, q, i, e);
    }
  }
  // + (1/2) Lap_w d_{n-4}
  if (has_d(n - 4) && j < d_[n - 4].n_j) {
    for (int e = 0; e < nel; ++e) rhs(e) += 0.5 * dw2_field(d_[n - 4], k, j, i, e);
  }
  // + (grad_w Phi) . (grad_w c_{n-4}) + (1/2)(Lap_w Phi) c_{n-4}
  if (has_c(n - 4) && j < c_[n - 4].n_j) {
    Complex dc = dw1_field(c_[n - 4], k, j, i, 0);
    rhs += sf_->dPhi_w(k, i) * dc;
    rhs += 0.5 * sf_->d2Phi_w(k, i) * c_[n - 4].at(k, j, i);
  }
  // + sum_q <phi_j, d_y phi_q> grad_w d_{n-3, q}
  if (has_d(n - 3)) {
    const CoefficientField& dd = d_[n - 3];
    for (long q = std::max<long>(0, j - 1); q < std::min<long>(dd.n_j, j + 2); ++q) {
      Complex Djq = Dstep_[k](j, q);
      if (Djq == Complex(0, 0)) continue;
      for (int e = 0; e < nel; ++e) rhs(e) += Djq * dw1_field(dd, k, q, i, e);
    }
  }
  // + sum_q <phi_j, d_y phi_q> (grad_w Phi) c_{n-3, q}
  if (has_c(n - 3)) {
    const CoefficientField& cc = c_[n - 3];
    Complex acc = 0;
    for (long q = std::max<long>(0, j - 1); q < std::min<long>(cc.n_j, j + 2); ++q)
      acc += Dstep_[k](j, q) * cc.at(k, q, i);
    rhs += sf_->dPhi_w(k, i) * acc;
  }
  // + i (dPhi/dt) c_{n-2}
  if (has_c(n - 2) && j < c_[n - 2].n_j) {
    rhs += I * sf_->dPhi_t(k, i) * c_[n - 2].at(k, j, i);
  }
  return rhs;
}

void ExpansionEngine::compute_d_order(int n) {
  const long nt = set_.tgrid.n, nw = set_.wgrid.n;
  const int nel = sf_->n_el();
  CoefficientField& out = d_[n];
  out.order = n;
  out.resize(nt, d_degree(set_.J, n) + 1, nw, nel);
  for (long k = 0; k < nt; ++k) {
    std::vector<Matrix> Ypow = y_powers(k, std::max(0, n - 2));
    for (long j = 0; j < out.n_j; ++j)
      for (long i = 0; i < nw; ++i) {
        Vector rhs = perp_rhs(n, k, j, i, Ypow);
        Vector dn = sf_->resolvent(k, i, rhs);
        for (int e = 0; e < nel; ++e) out.at(k, j, i, e) = dn(e);
      }
  }
}

void ExpansionEngine::assemble_gamma(int n, CoefficientField& out) const {
  const long nt = set_.tgrid.n, nw = set_.wgrid.n;
  const int nel = sf_->n_el();
  out.order = n;
  out.resize(nt, c_degree(set_.J, n) + 1, nw, 1);
  const Complex I(0, 1);

  for (long k = 0; k < nt; ++k) {
    std::vector<Matrix> Ypow = y_powers(k, n + 2);
    for (long j = 0; j < out.n_j; ++j)
      for (long i = 0; i < nw; ++i) {
        Complex g = 0;
        // Gamma_1..3: -(1/2) Lap c_{n-2} - <Phi,dPhi>.grad c_{n-2} - (1/2)<Phi,LapPhi> c_{n-2}
        if (has_c(n - 2) && j < c_[n - 2].n_j) {
          g -= 0.5 * dw2_field(c_[n - 2], k, j, i, 0);
          g -= sf_->conn1(k, i) * dw1_field(c_[n - 2], k, j, i, 0);
          g -= 0.5 * sf_->conn2(k, i) * c_[n - 2].at(k, j, i);
        }
        // Gamma_4, Gamma_5 over c_{n-1}
        if (has_c(n - 1)) {
          const CoefficientField& cc = c_[n - 1];
          for (long q = std::max<long>(0, j - 1); q < std::min<long>(cc.n_j, j + 2); ++q) {
            Complex Djq = Dstep_[k](j, q);
            if (Djq == Complex(0, 0)) continue;
            g -= Djq * dw1_field(cc, k, q, i, 0);
            g -= sf_->conn1(k, i) * Djq * cc.at(k, q, i);
          }
        }
        // Gamma_6: + sum_{m=3}^{n+2} (D^mE/m!) <phi_j, y^m phi_q> c_{n+2-m, q}
        for (int m = 3; m <= n + 2; ++m) {
          if (!has_c(n + 2 - m)) continue;
          const double tc = taylor_[k][m];
          if (tc == 0.0) continue;
          const CoefficientField& cc = c_[n + 2 - m];
          for (long q = std::max<long>(0, j - m); q < std::min<long>(cc.n_j, j + m + 1); ++q) {
            Complex y = Ypow[m](j, q);
            if (y == Complex(0, 0)) continue;
            g += tc * y * cc.at(k, q, i);
          }
        }
        // Gamma_7: -(1/2) <Phi, Lap_w d_{n-2, j}>
        if (has_d(n - 2) && j < d_[n - 2].n_j) {
          Vector lap(nel);
          for (int e = 0; e < nel; ++e) lap(e) = dw2_field(d_[n - 2], k, j, i, e);
          g -= 0.5 * sf_->Phi(k, i).dot(lap);
        }
        // Gamma_8: - sum_q <phi_j, d_y phi_q> <Phi, grad_w d_{n-1, q}>
        if (has_d(n - 1)) {
          const CoefficientField& dd = d_[n - 1];
          for (long q = std::max<long>(0, j - 1); q < std::min<long>(dd.n_j, j + 2); ++q) {
            Complex Djq = Dstep_[k](j, q);
            if (Djq == Complex(0, 0)) continue;
            Vector gw(nel);
            for (int e = 0; e < nel; ++e) gw(e) = dw1_field(dd, k, q, i, e);
            g -= Djq * sf_->Phi(k, i).dot(gw);
          }
        }
        // Gamma_9: + i <dPhi/dt, d_{n, j}>
        if (has_d(n) && j < d_[n].n_j) {
          Vector dn(nel);
          for (int e = 0; e < nel; ++e) dn(e) = d_[n].at(k, j, i, e);
          g += I * sf_->dPhi_t(k, i).dot(dn);
        }
        out.at(k, j, i) = g;
      }
  }
}

void ExpansionEngine::compute_c_order(int n) {
  const long nt = set_.tgrid.n, nw = set_.wgrid.n;
  CoefficientField gamma;
  assemble_gamma(n, gamma);
  CoefficientField& out = c_[n];
  out.order = n;
  out.resize(nt, gamma.n_j, nw, 1);
  const Complex mi(0, -1);
  // c_n(t) = -i int_0^t (sum Gamma) ds, cumulative 4th-order quadrature
  for (long j = 0; j < out.n_j; ++j)
    for (long i = 0; i < nw; ++i) {
      Complex acc = 0;
      out.at(0, j, i) = 0;
      for (long k = 0; k + 1 < nt; ++k) {
        Stencil s = int_stencil(k, nt, set_.tgrid.h);
        acc += s.apply([&](long q) { return gamma.at(q, j, i); });
        out.at(k + 1, j, i) = mi * acc;
      }
    }
}

double ExpansionEngine::residual_parallel(int n) const {
  if (!has_c(n) || n < 1) return 0.0;
  CoefficientField gamma;
  assemble_gamma(n, gamma);
  const Complex I(0, 1);
  double worst = 0;
  for (long k = 0; k < set_.tgrid.n; ++k)
    for (long j = 0; j < c_[n].n_j; ++j)
      for (long i = 0; i < set_.wgrid.n; ++i) {
        if (!interior_w(i)) continue;
        Complex lhs = I * dot_field(c_[n], k, j, i, 0);
        worst = std::max(worst, std::abs(lhs - gamma.at(k, j, i)));
      }
  return worst;
}

double ExpansionEngine::residual_perpendicular(int n) const {
  if (!has_d(n)) return 0.0;
  const int nel = sf_->n_el();
  double worst = 0;
  for (long k = 0; k < set_.tgrid.n; ++k) {
    std::vector<Matrix> Ypow = y_powers(k, std::max(0, n - 2));
    for (long j = 0; j < d_[n].n_j; ++j)
      for (long i = 0; i < set_.wgrid.n; ++i) {
        if (!interior_w(i)) continue;
        Vector dn(nel);
        for (int e = 0; e < nel; ++e) dn(e) = d_[n].at(k, j, i, e);
        Vector lhs = sf_->h_minus_E(k, i, dn);
        Vector rhs = sf_->pperp(k, i, perp_rhs(n, k, j, i, Ypow));
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
      }
  }
  return worst;
}

double ExpansionEngine::orthogonality_defect(int n) const {
  if (!has_d(n)) return 0.0;
  const int nel = sf_->n_el();
  double worst = 0;
  for (long k = 0; k < set_.tgrid.n; ++k)
    for (long j = 0; j < d_[n].n_j; ++j)
      for (long i = 0; i < set_.wgrid.n; ++i) {
        Vector dn(nel);
        for (int e = 0; e < nel; ++e) dn(e) = d_[n].at(k, j, i, e);
        worst = std::max(worst, std::abs(sf_->Phi(k, i).dot(dn)));
      }
  return worst;
}

double ExpansionEngine::phase_condition_defect() const {
  // FD in t of the stored Phi field against the phase condition
  const long nt = set_.tgrid.n, nw = set_.wgrid.n;
  double worst = 0;
  for (long k = 0; k < nt; ++k) {
    Stencil s = d1_stencil(k, nt, set_.tgrid.h);
    for (long i = 0; i < nw; ++i) {
      if (!interior_w(i)) continue;
      Vector dphi = Vector::Zero(sf_->n_el());
      for (int q = 0; q < s.len; ++q) dphi += s.w[q] * sf_->Phi(s.start + q, i);
      dphi *= s.scale;
      worst = std::max(worst, std::abs(sf_->Phi(k, i).dot(dphi)));
    }
  }
  return worst;
}

ExpansionEngine::GrowthReport ExpansionEngine::growth_report() const {
  GrowthReport rep;
  rep.s.resize(set_.N + 1, 0.0);
  for (int n = 0; n <= set_.N; ++n) {
    double worst = 0;
    for (long k = 0; k < set_.tgrid.n; ++k)
      for (long i = 0; i < set_.wgrid.n; ++i) {
        if (!interior_w(i)) continue;
        double s2 = 0;
        for (long j = 0; j < c_[n].n_j; ++j) s2 += std::norm(c_[n].at(k, j, i));
        worst = std::max(worst, std::sqrt(s2));
      }
    rep.s[n] = worst;
  }
  // fit log s_n - (n/2) log n = logC + n log tau
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int n = 1; n <= set_.N; ++n) {
    if (rep.s[n] <= 0) continue;
    double x = n, y = std::log(rep.s[n]) - 0.5 * n * std::log(std::max(1.0, double(n)));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.tau = std::exp(slope);
    rep.logC = (sy - slope * sx) / cnt;
  }
  return rep;
}

void ExpansionEngine::dump_fields(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  auto put64 = [&](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto putd = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  out.write("HGFLD001", 8);
  put64(1);  // nuclear dimension
  put64(set_.J);
  put64(set_.N);
  put64(sf_->n_el());
  put64(set_.tgrid.n);
  put64(set_.wgrid.n);
  putd(set_.tgrid.T);
  putd(set_.wgrid.half_width);
  auto dump_one = [&](const CoefficientField& f) {
    put64(f.order);
    put64(f.n_el);
    put64(f.n_j);
    for (const Complex& z : f.v) {
      putd(z.real());
      putd(z.imag());
    }
  };
  put64(set_.N + 1);
  for (int n = 0; n <= set_.N; ++n) dump_one(c_[n]);
  std::int64_t nd = 0;
  for (int n = 2; n <= set_.N + 2; ++n) ++nd;
  put64(nd);
  for (int n = 2; n <= set_.N + 2; ++n) dump_one(d_[n]);
}

}  // namespace hagprop
