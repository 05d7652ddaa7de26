#include "hagprop/classical_flow.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hagprop {

FlowDerivative rhs(const FlowState& state, const Potential& pot) {
  const auto& p = state.params;
  if (!pot.inside(p.a)) throw RegionExitError(state.t);
  FlowDerivative d;
  d.da = p.eta;
  d.deta = -pot.gradE(p.a);
  d.dA = Complex(0, 1) * p.B;
  d.dB = Complex(0, 1) * (pot.hessE(p.a).cast<Complex>() * p.A).eval();
  d.dS = 0.5 * p.eta.squaredNorm() - pot.E(p.a);
  return d;
}

namespace {

struct Packed {
  RealVector a, eta;
  Matrix A, B;
  double S;
};

Packed pack(const WavepacketParams& p) { return {p.a, p.eta, p.A, p.B, p.S}; }

Packed axpy(const Packed& y, double h, const FlowDerivative& f) {
  return {y.a + h * f.da, y.eta + h * f.deta, y.A + h * f.dA, y.B + h * f.dB, y.S + h * f.dS};
}

WavepacketParams unpack(const Packed& y, const WavepacketParams& proto) {
  WavepacketParams p = proto;
  p.a = y.a;
  p.eta = y.eta;
  p.A = y.A;
  p.B = y.B;
  p.S = y.S;
  return p;
}

FlowDerivative eval(const Packed& y, double t, const WavepacketParams& proto,
                    const Potential& pot) {
  FlowState s{t, unpack(y, proto)};
  return rhs(s, pot);
}

// one classical RK4 step
Packed rk4_step(const Packed& y, double t, double h, const WavepacketParams& proto,
                const Potential& pot, FlowDerivative* k1_out) {
  FlowDerivative k1 = eval(y, t, proto, pot);
  FlowDerivative k2 = eval(axpy(y, 0.5 * h, k1), t + 0.5 * h, proto, pot);
  FlowDerivative k3 = eval(axpy(y, 0.5 * h, k2), t + 0.5 * h, proto, pot);
  FlowDerivative k4 = eval(axpy(y, h, k3), t + h, proto, pot);
  Packed out = y;
  out.a += (h / 6.0) * (k1.da + 2 * k2.da + 2 * k3.da + k4.da);
  out.eta += (h / 6.0) * (k1.deta + 2 * k2.deta + 2 * k3.deta + k4.deta);
  out.A += (h / 6.0) * (k1.dA + 2 * k2.dA + 2 * k3.dA + k4.dA);
  out.B += (h / 6.0) * (k1.dB + 2 * k2.dB + 2 * k3.dB + k4.dB);
  out.S += (h / 6.0) * (k1.dS + 2 * k2.dS + 2 * k3.dS + k4.dS);
  if (k1_out) *k1_out = k1;
  return out;
}

Complex continue_branch(Complex prev, const Matrix& A) {
  Complex cur = 1.0 / std::sqrt(A.determinant());
  if (std::abs(std::arg(cur / prev)) > 0.5 * 3.14159265358979323846) cur = -cur;
  return cur;
}

}  // namespace

Trajectory propagate(const FlowState& state0, double T, double dt, const Potential& pot) {
  if (dt <= 0.0) throw std::invalid_argument("propagate: dt must be positive");
  if (T < 0.0) dt = -dt;

  Trajectory traj;
  WavepacketParams proto = state0.params;
  if (proto.sqrt_det_A_inv == Complex(0, 0))
    proto.sqrt_det_A_inv = 1.0 / std::sqrt(proto.A.determinant());

  Packed y = pack(proto);
  double t = state0.t;
  const double t_end = state0.t + T;
  Complex branch = proto.sqrt_det_A_inv;

  auto record = [&](const Packed& yy, double tt, Complex br) {
    WavepacketParams p = unpack(yy, proto);
    p.sqrt_det_A_inv = br;
    auto [c1, c2] = validate(p);
    double defect = std::max(c1, c2);
    if (defect > 1e-6) throw InvariantBlowupError(tt, defect);
    TrajectorySample s;
    s.t = tt;
    s.deriv = eval(yy, tt, proto, pot);
    s.params = std::move(p);
    s.cond1_defect = defect;
    traj.append(std::move(s));
  };

  record(y, t, branch);

  const long nsteps = std::lround(std::abs(T) / std::abs(dt));
  for (long k = 0; k < nsteps; ++k) {
    double h = (k == nsteps - 1) ? (t_end - t) : dt;
    if (h == 0.0) break;
    Packed ynext;
    try {
      ynext = rk4_step(y, t, h, proto, pot, nullptr);
      if (!pot.inside(ynext.a)) throw RegionExitError(t + h);
    } catch (const RegionExitError&) {
      // bisection for the exit time to 1e-10
      double lo = 0.0, hi = h;
      while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        bool ok = true;
        try {
          Packed ym = rk4_step(y, t, mid, proto, pot, nullptr);
          ok = pot.inside(ym.a);
        } catch (const RegionExitError&) {
          ok = false;
        }
        (ok ? lo : hi) = mid;
      }
      throw RegionExitError(t + lo);
    }
    y = ynext;
    t += h;
    branch = continue_branch(branch, y.A);
    record(y, t, branch);
  }
  return traj;
}

namespace {

template <typename Field>
Field hermite_interp(double t, double t0, double t1, const Field& y0, const Field& y1,
                     const Field& f0, const Field& f1) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

}  // namespace

WavepacketParams Trajectory::at(double t) const {
  const auto& ss = samples_;
  if (ss.size() == 1) return ss.front().params;
  // samples are uniformly spaced except possibly the final step
  const double h = ss[1].t - ss[0].t;
  std::size_t k = 0;
  if (h != 0.0) {
    long kk = static_cast<long>(std::floor((t - ss[0].t) / h));
    k = static_cast<std::size_t>(std::clamp<long>(kk, 0, static_cast<long>(ss.size()) - 2));
  }
  const bool fwd = ss.back().t >= ss.front().t;
  while (k + 2 < ss.size() && (fwd ? ss[k + 1].t <= t : ss[k + 1].t >= t)) ++k;
  while (k > 0 && (fwd ? ss[k].t > t : ss[k].t < t)) --k;
  const auto& s0 = ss[k];
  const auto& s1 = ss[k + 1];
  WavepacketParams p = s0.params;
  p.a = hermite_interp<RealVector>(t, s0.t, s1.t, s0.params.a, s1.params.a, s0.deriv.da,
                                   s1.deriv.da);
  p.eta = hermite_interp<RealVector>(t, s0.t, s1.t, s0.params.eta, s1.params.eta, s0.deriv.deta,
                                     s1.deriv.deta);
  p.A = hermite_interp<Matrix>(t, s0.t, s1.t, s0.params.A, s1.params.A, s0.deriv.dA, s1.deriv.dA);
  p.B = hermite_interp<Matrix>(t, s0.t, s1.t, s0.params.B, s1.params.B, s0.deriv.dB, s1.deriv.dB);
  double w = (t - s0.t) / (s1.t - s0.t);
  p.S = hermite_interp<double>(t, s0.t, s1.t, s0.params.S, s1.params.S, s0.deriv.dS, s1.deriv.dS);
  // branch: interpolate from the nearer sample's branch by continuity
  Complex nearer = (w < 0.5) ? s0.params.sqrt_det_A_inv : s1.params.sqrt_det_A_inv;
  Complex cur = 1.0 / std::sqrt(p.A.determinant());
  if (std::abs(std::arg(cur / nearer)) > 0.5 * 3.14159265358979323846) cur = -cur;
  p.sqrt_det_A_inv = cur;
  return p;
}

RealVector Trajectory::a_at(double t) const { return at(t).a; }
RealVector Trajectory::eta_at(double t) const { return at(t).eta; }

double Trajectory::max_cond1_defect() const {
  double m = 0.0;
  for (const auto& s : samples_) m = std::max(m, s.cond1_defect);
  return m;
}

void Trajectory::write_csv(const std::string& path) const {
  std::ofstream out(path);
  const int d = samples_.front().params.dim();
  out << "t";
  for (int i = 0; i < d; ++i) out << ",a" << i;
  for (int i = 0; i < d; ++i) out << ",eta" << i;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out << ",ReA" << i << j << ",ImA" << i << j;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out << ",ReB" << i << j << ",ImB" << i << j;
  out << ",S\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (const auto& s : samples_) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    out << buf;
    for (int i = 0; i < d; ++i) put(s.params.a(i));
    for (int i = 0; i < d; ++i) put(s.params.eta(i));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        put(s.params.A(i, j).real());
        put(s.params.A(i, j).imag());
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        put(s.params.B(i, j).real());
        put(s.params.B(i, j).imag());
      }
    put(s.params.S);
    out << "\n";
  }
}

double energy(const TrajectorySample& s, const Potential& pot) {
  return 0.5 * s.params.eta.squaredNorm() + pot.E(s.params.a);
}

double linearization_check(const FlowState& state0, double T, double dt, const Potential& pot,
                           double fd_step) {
  const int d = state0.params.dim();
  auto endpoint = [&](const RealVector& da0, const RealVector& deta0) {
    FlowState s = state0;
    s.params.a += da0;
    s.params.eta += deta0;
    Trajectory tr = propagate(s, T, dt, pot);
    return std::make_pair(tr.samples().back().params.a, tr.samples().back().params.eta);
  };

  RealMatrix da_da0(d, d), da_deta0(d, d), deta_da0(d, d), deta_deta0(d, d);
  for (int i = 0; i < d; ++i) {
    RealVector e = RealVector::Zero(d);
    e(i) = fd_step;
    auto [ap, ep] = endpoint(e, RealVector::Zero(d));
    auto [am, em] = endpoint(-e, RealVector::Zero(d));
    da_da0.col(i) = (ap - am) / (2 * fd_step);
    deta_da0.col(i) = (ep - em) / (2 * fd_step);
    auto [ap2, ep2] = endpoint(RealVector::Zero(d), e);
    auto [am2, em2] = endpoint(RealVector::Zero(d), -e);
    da_deta0.col(i) = (ap2 - am2) / (2 * fd_step);
    deta_deta0.col(i) = (ep2 - em2) / (2 * fd_step);
  }

  Trajectory tr = propagate(state0, T, dt, pot);
  const auto& pT = tr.samples().back().params;
  Matrix A_pred = da_da0.cast<Complex>() * state0.params.A +
                  Complex(0, 1) * da_deta0.cast<Complex>() * state0.params.B;
  Matrix B_pred = deta_deta0.cast<Complex>() * state0.params.B -
                  Complex(0, 1) * deta_da0.cast<Complex>() * state0.params.A;
  return std::max((A_pred - pT.A).cwiseAbs().maxCoeff(), (B_pred - pT.B).cwiseAbs().maxCoeff());
}

}  // namespace hagprop
