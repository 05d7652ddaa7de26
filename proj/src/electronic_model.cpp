#include "hagprop/electronic_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <mutex>

namespace hagprop {

std::vector<double> fd_weights(double x0, const std::vector<double>& grid, int m) {
  // Fornberg's algorithm, weights for derivative order m at x0
  const int n = static_cast<int>(grid.size()) - 1;
  std::vector<std::vector<std::vector<double>>> c(
      m + 1, std::vector<std::vector<double>>(n + 1, std::vector<double>(n + 1, 0.0)));
  c[0][0][0] = 1.0;
  double c1 = 1.0;
  for (int nn = 1; nn <= n; ++nn) {
    double c2 = 1.0;
    for (int nu = 0; nu < nn; ++nu) {
      double c3 = grid[nn] - grid[nu];
      c2 *= c3;
      for (int k = 0; k <= std::min(nn, m); ++k) {
        double prev = (k > 0) ? c[k - 1][nn - 1][nu] : 0.0;
        c[k][nn][nu] = ((grid[nn] - x0) * c[k][nn - 1][nu] - k * prev) / c3;
      }
    }
    for (int k = 0; k <= std::min(nn, m); ++k) {
      double prev = (k > 0) ? c[k - 1][nn - 1][nn - 1] : 0.0;
      c[k][nn][nn] = c1 / c2 * (k * prev - (grid[nn - 1] - x0) * c[k][nn - 1][nn - 1]);
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[m][n][i];
  return w;
}

void ElectronicModel::eigensystem(double X, RealVector& evals, Matrix& evecs) const {
  Matrix H = h(X);
  if ((H - H.adjoint()).norm() > 1e-12 * std::max(1.0, H.norm()))
    throw std::runtime_error("electronic Hamiltonian not Hermitian at X=" + std::to_string(X));
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
}

double ElectronicModel::E(double X) const {
  RealVector ev;
  Matrix V;
  eigensystem(X, ev, V);
  return ev(level());
}

double ElectronicModel::gap(double X) const {
  RealVector ev;
  Matrix V;
  eigensystem(X, ev, V);
  double g = 1e300;
  for (int k = 0; k < ev.size(); ++k)
    if (k != level()) g = std::min(g, std::abs(ev(k) - ev(level())));
  return g;
}

double ElectronicModel::dE(double X) const {
  const double h0 = 1e-4 * std::max(1.0, std::abs(X));
  std::vector<double> g = {X - 2 * h0, X - h0, X, X + h0, X + 2 * h0};
  auto w = fd_weights(X, g, 1);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) acc += w[i] * E(g[i]);
  return acc;
}

double ElectronicModel::d2E(double X) const {
  const double h0 = 3e-4 * std::max(1.0, std::abs(X));
  std::vector<double> g = {X - 2 * h0, X - h0, X, X + h0, X + 2 * h0};
  auto w = fd_weights(X, g, 2);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) acc += w[i] * E(g[i]);
  return acc;
}

double ElectronicModel::taylor_coeff(double a, int m) const {
  if (m > max_taylor_order()) throw std::domain_error("taylor_coeff: order above configured max");
  if (m == 0) return E(a);
  // central stencil with Richardson extrapolation of the 4th-order result
  const int half = m / 2 + 2;
  auto deriv = [&](double h0) {
    std::vector<double> g(2 * half + 1);
    for (int i = -half; i <= half; ++i) g[i + half] = a + i * h0;
    auto w = fd_weights(a, g, m);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += w[i] * E(g[i]);
    return acc;
  };
  const double h0 = 0.06 * std::pow(2.0, m / 4.0);
  double dh = deriv(h0), dh2 = deriv(h0 / 2.0);
  double dm = (16.0 * dh2 - dh) / 15.0;
  return dm * std::exp(-std::lgamma(m + 1.0));
}

// ---- generic gauge cache ----------------------------------------------------

namespace {

struct GaugeCache {
  double x_lo = 0, x_hi = 0, h = 0;
  std::vector<Vector> phi;     // aligned smooth section at nodes
  std::vector<double> mu;      // Im<phi, phi'>
  std::vector<Vector> dphi, d2phi;
  std::vector<double> dmu, d2mu;
  bool ready = false;
};

}  // namespace

class GenericGaugeModel : public ElectronicModel {
 public:
  void prepare_gauge(double x_lo, double x_hi) const override {
    std::lock_guard<std::mutex> lock(mtx_);
    if (cache_.ready && cache_.x_lo <= x_lo && cache_.x_hi >= x_hi) return;
    build(x_lo, x_hi);
  }

  Vector phi(double X) const override { return interp_vec(cache_.phi, X); }
  Vector dphi(double X) const override { return interp_vec(cache_.dphi, X); }
  Vector d2phi(double X) const override { return interp_vec(cache_.d2phi, X); }
  double mu(double X) const override { return interp_scalar(cache_.mu, X); }
  double dmu(double X) const override { return interp_scalar(cache_.dmu, X); }
  double d2mu(double X) const override { return interp_scalar(cache_.d2mu, X); }

 protected:
  mutable GaugeCache cache_;
  mutable std::mutex mtx_;
  double cache_step_ = 0.004;

  void build(double x_lo, double x_hi) const {
    const double pad = 0.05 * (x_hi - x_lo) + 10 * cache_step_;
    cache_.x_lo = x_lo - pad;
    cache_.x_hi = x_hi + pad;
    cache_.h = cache_step_;
    const long n = static_cast<long>(std::ceil((cache_.x_hi - cache_.x_lo) / cache_.h)) + 1;
    cache_.phi.assign(n, Vector());
    RealVector ev;
    Matrix V;
    for (long i = 0; i < n; ++i) {
      double X = cache_.x_lo + i * cache_.h;
      eigensystem(X, ev, V);
      Vector v = V.col(level());
      if (i > 0) {
        Complex ov = cache_.phi[i - 1].dot(v);
        if (std::abs(ov) < 1e-12)
          throw GapCollapseError(X, std::abs(ev(1) - ev(0)));
        v *= std::conj(ov) / std::abs(ov);
      }
      cache_.phi[i] = v;
    }
    // 4th-order derivatives of the aligned section on the cache grid
    auto d1 = [&](const std::vector<Vector>& f, long i) {
      long k = std::clamp<long>(i, 2, n - 3);
      return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * cache_.h);
    };
    auto d2v = [&](const std::vector<Vector>& f, long i) {
      long k = std::clamp<long>(i, 2, n - 3);
      return (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]) /
             (12.0 * cache_.h * cache_.h);
    };
    cache_.dphi.assign(n, Vector());
    cache_.d2phi.assign(n, Vector());
    cache_.mu.assign(n, 0.0);
    for (long i = 0; i < n; ++i) {
      cache_.dphi[i] = d1(cache_.phi, i);
      cache_.d2phi[i] = d2v(cache_.phi, i);
      cache_.mu[i] = cache_.phi[i].dot(cache_.dphi[i]).imag();
    }
    auto d1s = [&](const std::vector<double>& f, long i) {
      long k = std::clamp<long>(i, 2, n - 3);
      return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * cache_.h);
    };
    auto d2s = [&](const std::vector<double>& f, long i) {
      long k = std::clamp<long>(i, 2, n - 3);
      return (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]) /
             (12.0 * cache_.h * cache_.h);
    };
    cache_.dmu.assign(n, 0.0);
    cache_.d2mu.assign(n, 0.0);
    for (long i = 0; i < n; ++i) {
      cache_.dmu[i] = d1s(cache_.mu, i);
      cache_.d2mu[i] = d2s(cache_.mu, i);
    }
    cache_.ready = true;
  }

  template <typename T>
  T interp_generic(const std::vector<T>& f, double X) const {
    if (!cache_.ready) throw std::runtime_error("gauge cache not prepared");
    const long n = static_cast<long>(f.size());
    double s = (X - cache_.x_lo) / cache_.h;
    long k0 = std::clamp<long>(static_cast<long>(std::floor(s)) - 2, 0, n - 6);
    // 6-point Lagrange
    T acc = f[k0] * 0.0;
    for (int i = 0; i < 6; ++i) {
      double L = 1.0;
      for (int j = 0; j < 6; ++j)
        if (j != i) L *= (s - (k0 + j)) / double(i - j);
      acc += L * f[k0 + i];
    }
    return acc;
  }
  Vector interp_vec(const std::vector<Vector>& f, double X) const { return interp_generic(f, X); }
  double interp_scalar(const std::vector<double>& f, double X) const {
    return interp_generic(f, X);
  }
};

double ElectronicModel::mu(double X) const { return phi(X).dot(dphi(X)).imag(); }
double ElectronicModel::dmu(double X) const {
  const double h0 = 1e-4;
  return (mu(X - 2 * h0) - 8 * mu(X - h0) + 8 * mu(X + h0) - mu(X + 2 * h0)) / (12 * h0);
}
double ElectronicModel::d2mu(double X) const {
  const double h0 = 1e-3;
  return (-mu(X - 2 * h0) + 16 * mu(X - h0) - 30 * mu(X) + 16 * mu(X + h0) - mu(X + 2 * h0)) /
         (12 * h0 * h0);
}

Vector ElectronicModel::phi(double) const {
  throw std::runtime_error("model '" + name() + "' has no smooth eigenvector section; use a gauge-cache model or an analytic override");
}
Vector ElectronicModel::dphi(double) const {
  throw std::runtime_error("model '" + name() + "' has no eigenvector derivatives");
}
Vector ElectronicModel::d2phi(double) const {
  throw std::runtime_error("model '" + name() + "' has no eigenvector derivatives");
}

Vector ElectronicModel::pperp_apply(double X, const Vector& v) const {
  RealVector ev;
  Matrix V;
  eigensystem(X, ev, V);
  Vector sel = V.col(level());
  return v - sel * sel.dot(v);
}

Vector ElectronicModel::resolvent_apply(double X, const Vector& v) const {
  RealVector ev;
  Matrix V;
  eigensystem(X, ev, V);
  const int lv = level();
  Vector out = Vector::Zero(v.size());
  for (int k = 0; k < ev.size(); ++k) {
    if (k == lv) continue;
    double de = ev(k) - ev(lv);
    if (std::abs(de) < gap_threshold) throw GapCollapseError(X, std::abs(de));
    out += V.col(k) * (V.col(k).dot(v) / de);
  }
  return out;
}

SpectralPoint spectral(const ElectronicModel& model, double X) {
  RealVector ev;
  Matrix V;
  model.eigensystem(X, ev, V);
  const int lv = model.level();
  SpectralPoint sp;
  sp.E = ev(lv);
  sp.phi_raw = V.col(lv);
  sp.P_perp = Matrix::Identity(ev.size(), ev.size()) - sp.phi_raw * sp.phi_raw.adjoint();
  sp.gap = 1e300;
  for (int k = 0; k < ev.size(); ++k)
    if (k != lv) sp.gap = std::min(sp.gap, std::abs(ev(k) - ev(lv)));
  if (sp.gap < model.gap_threshold) throw GapCollapseError(X, sp.gap);
  return sp;
}

Potential potential_of(const ElectronicModel& model) {
  Potential pot;
  pot.E = [&model](const RealVector& a) { return model.E(a(0)); };
  pot.gradE = [&model](const RealVector& a) {
    RealVector g(1);
    g(0) = model.dE(a(0));
    return g;
  };
  pot.hessE = [&model](const RealVector& a) {
    RealMatrix H(1, 1);
    H(0, 0) = model.d2E(a(0));
    return H;
  };
  pot.inside = [&model](const RealVector& a) { return model.inside(a(0)); };
  return pot;
}

// ---- catalog ----------------------------------------------------------------

namespace {

// derivatives of rho(X) = sqrt(c2 X^2 + c0) by the Leibniz recursion on
// rho * rho = c2 X^2 + c0
void rho_derivatives(double X, double c2, double c0, int mmax, std::vector<double>& out) {
  out.assign(mmax + 1, 0.0);
  double rho = std::sqrt(c2 * X * X + c0);
  out[0] = rho;
  for (int m = 1; m <= mmax; ++m) {
    double rhs = 0.0;
    if (m == 1) rhs = 2.0 * c2 * X;
    if (m == 2) rhs = 2.0 * c2;
    double acc = rhs;
    for (int k = 1; k < m; ++k) {
      acc -= static_cast<double>(binomial(m, k)) * out[k] * out[m - k];
    }
    out[m] = acc / (2.0 * rho);
  }
}

class TrivialAdiabatic : public ElectronicModel {
 public:
  TrivialAdiabatic(double omega, double gap0) : omega_(omega), gap0_(gap0) {}
  std::string name() const override { return "trivial_adiabatic"; }
  int n_el() const override { return 2; }
  Matrix h(double X) const override {
    Matrix H = Matrix::Zero(2, 2);
    H(0, 0) = 0.5 * omega_ * omega_ * X * X;
    H(1, 1) = 0.5 * omega_ * omega_ * X * X + gap0_;
    return H;
  }
  double E(double X) const override { return 0.5 * omega_ * omega_ * X * X; }
  double dE(double X) const override { return omega_ * omega_ * X; }
  double d2E(double) const override { return omega_ * omega_; }
  double taylor_coeff(double a, int m) const override {
    if (m == 0) return E(a);
    if (m == 1) return dE(a);
    if (m == 2) return 0.5 * omega_ * omega_;
    return 0.0;
  }
  Vector phi(double) const override {
    Vector v(2);
    v << 1.0, 0.0;
    return v;
  }
  Vector dphi(double) const override { return Vector::Zero(2); }
  Vector d2phi(double) const override { return Vector::Zero(2); }
  double mu(double) const override { return 0.0; }
  double dmu(double) const override { return 0.0; }
  double d2mu(double) const override { return 0.0; }
  bool trivial_connection() const override { return true; }
  void eigensystem(double X, RealVector& ev, Matrix& V) const override {
    ev.resize(2);
    ev << E(X), E(X) + gap0_;
    V = Matrix::Identity(2, 2);
  }

 private:
  double omega_, gap0_;
};

class AvoidedCrossing : public ElectronicModel {
 public:
  AvoidedCrossing(double delta, double omega) : delta_(delta), omega_(omega) {}
  std::string name() const override { return "avoided_crossing"; }
  int n_el() const override { return 2; }
  Matrix h(double X) const override {
    Matrix H(2, 2);
    double c = 0.5 * omega_ * omega_ * X * X;
    H << Complex(X + c), Complex(delta_), Complex(delta_), Complex(-X + c);
    return H;
  }
  double rho(double X) const { return std::sqrt(X * X + delta_ * delta_); }
  double E(double X) const override { return 0.5 * omega_ * omega_ * X * X - rho(X); }
  double dE(double X) const override { return omega_ * omega_ * X - X / rho(X); }
  double d2E(double X) const override {
    double r = rho(X);
    return omega_ * omega_ - delta_ * delta_ / (r * r * r);
  }
  double taylor_coeff(double a, int m) const override {
    std::vector<double> dr;
    rho_derivatives(a, 1.0, delta_ * delta_, m, dr);
    double coeff = -dr[m] * std::exp(-std::lgamma(m + 1.0));
    if (m == 0) coeff += 0.5 * omega_ * omega_ * a * a;
    if (m == 1) coeff += omega_ * omega_ * a;
    if (m == 2) coeff += 0.5 * omega_ * omega_;
    return coeff;
  }
  // lower-level section: (sin(u), -cos(u)), u = atan2(delta, X)/2
  Vector phi(double X) const override {
    double u = 0.5 * std::atan2(delta_, X);
    Vector v(2);
    v << std::sin(u), -std::cos(u);
    return v;
  }
  Vector dphi(double X) const override {
    double r2 = X * X + delta_ * delta_;
    double up = -delta_ / (2.0 * r2);
    double u = 0.5 * std::atan2(delta_, X);
    Vector v(2);
    v << up * std::cos(u), up * std::sin(u);
    return v;
  }
  Vector d2phi(double X) const override {
    double r2 = X * X + delta_ * delta_;
    double up = -delta_ / (2.0 * r2);
    double upp = delta_ * X / (r2 * r2);
    double u = 0.5 * std::atan2(delta_, X);
    Vector v(2);
    v << upp * std::cos(u) - up * up * std::sin(u), upp * std::sin(u) + up * up * std::cos(u);
    return v;
  }
  double mu(double) const override { return 0.0; }
  double dmu(double) const override { return 0.0; }
  double d2mu(double) const override { return 0.0; }
  bool trivial_connection() const override { return true; }
  void eigensystem(double X, RealVector& ev, Matrix& V) const override {
    double c = 0.5 * omega_ * omega_ * X * X, r = rho(X);
    ev.resize(2);
    ev << c - r, c + r;
    double u = 0.5 * std::atan2(delta_, X);
    V.resize(2, 2);
    V(0, 0) = std::sin(u);
    V(1, 0) = -std::cos(u);
    V(0, 1) = std::cos(u);
    V(1, 1) = std::sin(u);
    return;
  }

 private:
  double delta_, omega_;
};

class ComplexCoupling : public GenericGaugeModel {
 public:
  ComplexCoupling(double delta, double kappa, double omega)
      : delta_(delta), kappa_(kappa), omega_(omega) {}
  std::string name() const override { return "complex_coupling"; }
  int n_el() const override { return 2; }
  Matrix h(double X) const override {
    Matrix H(2, 2);
    double c = 0.5 * omega_ * omega_ * X * X;
    Complex off(delta_, kappa_ * X);
    H(0, 0) = X + c;
    H(0, 1) = off;
    H(1, 0) = std::conj(off);
    H(1, 1) = -X + c;
    return H;
  }
  double E(double X) const override {
    return 0.5 * omega_ * omega_ * X * X -
           std::sqrt((1.0 + kappa_ * kappa_) * X * X + delta_ * delta_);
  }
  double dE(double X) const override {
    double c2 = 1.0 + kappa_ * kappa_;
    return omega_ * omega_ * X - c2 * X / std::sqrt(c2 * X * X + delta_ * delta_);
  }
  double d2E(double X) const override {
    double c2 = 1.0 + kappa_ * kappa_;
    double r = std::sqrt(c2 * X * X + delta_ * delta_);
    return omega_ * omega_ - c2 * delta_ * delta_ / (r * r * r);
  }
  double taylor_coeff(double a, int m) const override {
    std::vector<double> dr;
    rho_derivatives(a, 1.0 + kappa_ * kappa_, delta_ * delta_, m, dr);
    double coeff = -dr[m] * std::exp(-std::lgamma(m + 1.0));
    if (m == 0) coeff += 0.5 * omega_ * omega_ * a * a;
    if (m == 1) coeff += omega_ * omega_ * a;
    if (m == 2) coeff += 0.5 * omega_ * omega_;
    return coeff;
  }

 private:
  double delta_, kappa_, omega_;
};

class ThreeLevel : public ElectronicModel {
 public:
  ThreeLevel(double omega, double g1, double g2) : omega_(omega), g1_(g1), g2_(g2) {}
  std::string name() const override { return "three_level"; }
  int n_el() const override { return 3; }
  Matrix h(double X) const override {
    Matrix H = Matrix::Zero(3, 3);
    double c = 0.5 * omega_ * omega_ * X * X;
    H(0, 0) = c;
    H(1, 1) = c + g1_;
    H(2, 2) = c + g2_;
    return H;
  }
  double E(double X) const override { return 0.5 * omega_ * omega_ * X * X; }
  double dE(double X) const override { return omega_ * omega_ * X; }
  double d2E(double) const override { return omega_ * omega_; }
  double taylor_coeff(double a, int m) const override {
    if (m == 0) return E(a);
    if (m == 1) return dE(a);
    if (m == 2) return 0.5 * omega_ * omega_;
    return 0.0;
  }
  Vector phi(double) const override {
    Vector v = Vector::Zero(3);
    v(0) = 1.0;
    return v;
  }
  Vector dphi(double) const override { return Vector::Zero(3); }
  Vector d2phi(double) const override { return Vector::Zero(3); }
  double mu(double) const override { return 0.0; }
  double dmu(double) const override { return 0.0; }
  double d2mu(double) const override { return 0.0; }
  bool trivial_connection() const override { return true; }
  void eigensystem(double X, RealVector& ev, Matrix& V) const override {
    double c = 0.5 * omega_ * omega_ * X * X;
    ev.resize(3);
    ev << c, c + g1_, c + g2_;
    V = Matrix::Identity(3, 3);
  }

 private:
  double omega_, g1_, g2_;
};

}  // namespace

std::unique_ptr<ElectronicModel> make_trivial_adiabatic(double omega, double gap0) {
  return std::make_unique<TrivialAdiabatic>(omega, gap0);
}
std::unique_ptr<ElectronicModel> make_avoided_crossing(double delta, double omega) {
  return std::make_unique<AvoidedCrossing>(delta, omega);
}
std::unique_ptr<ElectronicModel> make_complex_coupling(double delta, double kappa, double omega) {
  return std::make_unique<ComplexCoupling>(delta, kappa, omega);
}
std::unique_ptr<ElectronicModel> make_three_level(double omega, double g1, double g2) {
  return std::make_unique<ThreeLevel>(omega, g1, g2);
}

std::unique_ptr<ElectronicModel> make_model(const std::string& id, double delta, double omega,
                                            double kappa, int level) {
  (void)level;
  if (id == "trivial_adiabatic") return make_trivial_adiabatic(omega, delta > 0 ? delta : 1.0);
  if (id == "avoided_crossing") return make_avoided_crossing(delta, omega);
  if (id == "complex_coupling") return make_complex_coupling(delta, kappa, omega);
  if (id == "three_level") return make_three_level(omega, delta, 2.5 * delta);
  throw std::invalid_argument("unknown model id: " + id);
}

}  // namespace hagprop
