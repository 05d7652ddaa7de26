#include "hagprop/wavepacket.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

namespace hagprop {

namespace {
constexpr double kPi = std::numbers::pi;
}

Complex WavepacketParams::det_branch() const {
  if (sqrt_det_A_inv != Complex(0.0, 0.0)) return sqrt_det_A_inv;
  return 1.0 / std::sqrt(A.determinant());
}

std::pair<double, double> validate(const WavepacketParams& p) {
  const int d = p.dim();
  Matrix c1 = p.A.transpose() * p.B - p.B.transpose() * p.A;
  Matrix c2 = p.A.adjoint() * p.B + p.B.adjoint() * p.A - 2.0 * Matrix::Identity(d, d);
  return {c1.norm(), c2.norm()};
}

bool is_valid(const WavepacketParams& p, double tol) {
  auto [d1, d2] = validate(p);
  return d1 <= tol && d2 <= tol && p.hbar > 0.0;
}

WavepacketParams random_valid_params(int dim, double hbar, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  RealMatrix K(dim, dim), G(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      K(i, j) = uni(rng);
      G(i, j) = uni(rng);
    }
  K = 0.5 * (K + K.transpose()).eval();
  RealMatrix L = G * G.transpose() + 0.3 * RealMatrix::Identity(dim, dim);

  Eigen::SelfAdjointEigenSolver<RealMatrix> es(L);
  RealMatrix Lh = es.operatorSqrt();

  // random unitary from QR of a complex Gaussian-ish matrix
  Matrix Z(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) Z(i, j) = Complex(uni(rng), uni(rng));
  Eigen::HouseholderQR<Matrix> qr(Z);
  Matrix Q = qr.householderQ();

  WavepacketParams p;
  p.A = Lh.cast<Complex>() * Q;
  p.B = Lh.inverse().cast<Complex>() *
        (Matrix::Identity(dim, dim) + Complex(0, 1) * K.cast<Complex>()) * Q;
  p.a = RealVector::Zero(dim);
  p.eta = RealVector::Zero(dim);
  p.hbar = hbar;
  return p;
}

Vector eval_phi0(const WavepacketParams& p, const Eigen::MatrixXd& X) {
  const int d = p.dim();
  if (X.cols() != d && !(d == 1 && X.cols() == 1))
    throw std::invalid_argument("eval_phi0: grid dimension mismatch");
  Eigen::FullPivLU<Matrix> lu(p.A);
  if (!lu.isInvertible()) throw std::invalid_argument("eval_phi0: A not invertible");
  Matrix M = p.B * lu.inverse();

  const Complex pref = std::pow(kPi, -0.25 * d) * std::pow(p.hbar, -0.25 * d) * p.det_branch();
  const long n = X.rows();
  Vector out(n);
  for (long g = 0; g < n; ++g) {
    Vector w = (X.row(g).transpose() - p.a).cast<Complex>();
    Complex quad = (w.transpose() * M * w)(0, 0);
    double lin = p.eta.dot(X.row(g).transpose() - p.a);
    out(g) = pref * std::exp(-quad / (2.0 * p.hbar) + Complex(0, 1) * lin / p.hbar);
  }
  return out;
}

BasisBlock::BasisBlock(const WavepacketParams& p, const Eigen::MatrixXd& X, int degree)
    : params_(p), table_(p.dim(), degree), X_(X) {
  values_.resize(X.rows(), table_.size());
  values_.col(0) = eval_phi0(params_, X_);
  for (int n = 1; n <= degree; ++n) fill_degree(n);
}

void BasisBlock::fill_degree(int n) {
  const int d = params_.dim();
  const Matrix Ainv = params_.A.inverse();
  const Matrix AinvAbar = Ainv * params_.A.conjugate();
  const double scale = std::sqrt(2.0 / params_.hbar);

  // For each j of degree n, lower the first nonzero slot: j = j' + e_m.
  for (std::size_t k = table_.count_upto(n - 1); k < table_.count_upto(n); ++k) {
    const MultiIndex& j = table_[k];
    int m = 0;
    while (j[m] == 0) ++m;
    MultiIndex jm = j;
    jm[m] -= 1;
    const std::size_t km = table_.offset(jm);

    Vector acc = Vector::Zero(X_.rows());
    for (long g = 0; g < X_.rows(); ++g) {
      Complex s = 0.0;
      for (int nn = 0; nn < d; ++nn)
        s += Ainv(m, nn) * (X_(g, nn) - params_.a(nn));
      acc(g) = scale * s * values_(g, km);
    }
    for (int nn = 0; nn < d; ++nn) {
      if (jm[nn] == 0) continue;
      MultiIndex jmn = jm;
      jmn[nn] -= 1;
      acc -= AinvAbar(m, nn) * std::sqrt(static_cast<double>(jm[nn])) *
             values_.col(table_.offset(jmn));
    }
    values_.col(k) = acc / std::sqrt(static_cast<double>(jm[m] + 1));
  }
}

void BasisBlock::raise_all() {
  const int deg = table_.max_degree() + 1;
  MultiIndexTable bigger(params_.dim(), deg);
  Matrix vals(X_.rows(), bigger.size());
  vals.leftCols(values_.cols()) = values_;
  table_ = std::move(bigger);
  values_ = std::move(vals);
  fill_degree(deg);
}

Matrix lowering_matrix(const MultiIndexTable& table, int m) {
  Matrix L = Matrix::Zero(table.size(), table.size());
  for (std::size_t q = 0; q < table.size(); ++q) {
    const MultiIndex& jq = table[q];
    if (jq[m] == 0) continue;
    MultiIndex jt = jq;
    jt[m] -= 1;
    L(table.offset(jt), q) = std::sqrt(static_cast<double>(jq[m]));
  }
  return L;
}

Matrix raising_matrix(const MultiIndexTable& table, int m) {
  Matrix R = Matrix::Zero(table.size(), table.size());
  for (std::size_t q = 0; q < table.size(); ++q) {
    MultiIndex jt = table[q];
    if (degree(jt) + 1 > table.max_degree()) continue;
    jt[m] += 1;
    R(table.offset(jt), q) = std::sqrt(static_cast<double>(jt[m]));
  }
  return R;
}

Matrix position_step_matrix(const WavepacketParams& p, const MultiIndexTable& table, int n) {
  // (X-a)_n = sqrt(hbar/2) sum_m [ conj(A)_{nm} A_m + A_{nm} A*_m ]
  const int d = p.dim();
  Matrix W = Matrix::Zero(table.size(), table.size());
  const double s = std::sqrt(p.hbar / 2.0);
  for (int m = 0; m < d; ++m) {
    W += s * std::conj(p.A(n, m)) * lowering_matrix(table, m);
    W += s * p.A(n, m) * raising_matrix(table, m);
  }
  return W;
}

Matrix derivative_step_matrix(const WavepacketParams& p, const MultiIndexTable& table, int n) {
  // d/dX_n = (1/sqrt(2 hbar)) sum_m [ conj(B)_{nm} A_m - B_{nm} A*_m ] + i eta_n / hbar
  const int d = p.dim();
  Matrix D = Matrix::Zero(table.size(), table.size());
  const double s = 1.0 / std::sqrt(2.0 * p.hbar);
  for (int m = 0; m < d; ++m) {
    D += s * std::conj(p.B(n, m)) * lowering_matrix(table, m);
    D -= s * p.B(n, m) * raising_matrix(table, m);
  }
  D += Complex(0, 1) * p.eta(n) / p.hbar * Matrix::Identity(table.size(), table.size());
  return D;
}

namespace {

Matrix composite_matrix(const WavepacketParams& p, const MultiIndexTable& table,
                        const MultiIndex& m, bool derivative) {
  const int extra = degree(m);
  MultiIndexTable big(table.dimension(), table.max_degree() + extra);
  Matrix acc = Matrix::Identity(big.size(), big.size());
  for (int n = 0; n < table.dimension(); ++n) {
    if (m[n] == 0) continue;
    Matrix step = derivative ? derivative_step_matrix(p, big, n)
                             : position_step_matrix(p, big, n);
    for (int r = 0; r < m[n]; ++r) acc = step * acc;
  }
  // Intermediate products only reach degrees <= table degree + |m|, so the
  // truncation back to the requested table is exact.
  return acc.topLeftCorner(table.size(), table.size());
}

}  // namespace

Matrix position_matrix(const WavepacketParams& p, const MultiIndexTable& table,
                       const MultiIndex& m) {
  return composite_matrix(p, table, m, false);
}

Matrix derivative_matrix(const WavepacketParams& p, const MultiIndexTable& table,
                         const MultiIndex& m) {
  return composite_matrix(p, table, m, true);
}

std::pair<double, double> projector_norm_check(const WavepacketParams& p,
                                               const MultiIndexTable& table, int n,
                                               const MultiIndex& m) {
  if (n + degree(m) > table.max_degree())
    throw std::invalid_argument("projector_norm_check: n + |m| exceeds table degree");
  Matrix Y = position_matrix(p, table, m);
  Matrix block = Y.leftCols(table.count_upto(n));
  double lhs = 0.0;
  if (degree(m) == 0) {
    lhs = 1.0;  // the projection itself
  } else {
    Eigen::JacobiSVD<Matrix> svd(block);
    lhs = svd.singularValues()(0);
  }
  const double normA = [&] {
    Eigen::JacobiSVD<Matrix> svd(p.A);
    return svd.singularValues()(0);
  }();
  MultiIndex top(table.dimension(), 0);
  // ((n+|m|)!/n!)^{1/2} in 1-d grading of the total degree
  double ratio = 1.0;
  for (int k = n + 1; k <= n + degree(m); ++k) ratio *= static_cast<double>(k);
  double rhs = std::pow(std::sqrt(2.0 * p.hbar) * table.dimension() * normA,
                        static_cast<double>(degree(m))) *
               std::sqrt(ratio);
  (void)top;
  return {lhs, rhs};
}

void gauss_hermite(int order, RealVector& nodes, RealVector& weights) {
  RealMatrix J = RealMatrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(J);
  nodes = es.eigenvalues();
  weights.resize(order);
  const double sqrt_pi = std::sqrt(kPi);
  for (int k = 0; k < order; ++k) {
    double v0 = es.eigenvectors()(0, k);
    weights(k) = sqrt_pi * v0 * v0;
  }
}

Matrix quadrature_gram(const WavepacketParams& p, int deg, int order) {
  const int d = p.dim();
  if (d > 2) throw std::invalid_argument("quadrature_gram: d <= 2 only");
  Matrix M = p.B * p.A.inverse();
  RealMatrix ReM = M.real();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(ReM);
  RealMatrix O = es.eigenvectors();
  RealVector lam = es.eigenvalues();

  RealVector u, wq;
  gauss_hermite(order, u, wq);

  // nodes x = a + O diag(sqrt(hbar/lam)) u, tensorized over dimensions
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> wts;
  if (d == 1) {
    double s = std::sqrt(p.hbar / lam(0));
    for (int i = 0; i < order; ++i) {
      Eigen::VectorXd x(1);
      x(0) = p.a(0) + s * u(i);
      pts.push_back(x);
      // weight: e^{+u^2} * GH weight * jacobian
      wts.push_back(wq(i) * std::exp(u(i) * u(i)) * s);
    }
  } else {
    double s0 = std::sqrt(p.hbar / lam(0)), s1 = std::sqrt(p.hbar / lam(1));
    for (int i = 0; i < order; ++i)
      for (int j = 0; j < order; ++j) {
        Eigen::VectorXd y(2);
        y(0) = s0 * u(i);
        y(1) = s1 * u(j);
        Eigen::VectorXd x = p.a + O * y;
        pts.push_back(x);
        wts.push_back(wq(i) * wq(j) * std::exp(u(i) * u(i) + u(j) * u(j)) * s0 * s1);
      }
  }

  Eigen::MatrixXd X(pts.size(), d);
  for (std::size_t g = 0; g < pts.size(); ++g) X.row(g) = pts[g].transpose();
  BasisBlock block(p, X, deg);
  const Matrix& V = block.values();
  Matrix G = Matrix::Zero(V.cols(), V.cols());
  for (long gi = 0; gi < V.rows(); ++gi)
    G += wts[gi] * V.row(gi).adjoint() * V.row(gi);
  return G;
}

Complex quadrature_position_element(const WavepacketParams& p, int j, int q, int m, int order) {
  Matrix M = p.B * p.A.inverse();
  double re = M.real()(0, 0);
  double s = std::sqrt(p.hbar / re);
  RealVector u, wq;
  gauss_hermite(order, u, wq);
  Eigen::MatrixXd X(order, 1);
  for (int i = 0; i < order; ++i) X(i, 0) = p.a(0) + s * u(i);
  BasisBlock block(p, X, std::max(j, q));
  Complex acc = 0.0;
  for (int i = 0; i < order; ++i) {
    double w = X(i, 0) - p.a(0);
    acc += wq(i) * std::exp(u(i) * u(i)) * s * std::conj(block.values()(i, j)) *
           std::pow(w, m) * block.values()(i, q);
  }
  return acc;
}

Complex quadrature_derivative_element(const WavepacketParams& p, int j, int q, int order) {
  Matrix M = p.B * p.A.inverse();
  double re = M.real()(0, 0);
  double s = std::sqrt(p.hbar / re);
  RealVector u, wq;
  gauss_hermite(order, u, wq);
  const double h = 1e-5 * std::sqrt(p.hbar);
  Complex acc = 0.0;
  for (int i = 0; i < order; ++i) {
    double x = p.a(0) + s * u(i);
    Eigen::MatrixXd Xs(5, 1);
    for (int k = -2; k <= 2; ++k) Xs(k + 2, 0) = x + k * h;
    BasisBlock block(p, Xs, std::max(j, q));
    Complex dq = (block.values()(0, q) - 8.0 * block.values()(1, q) +
                  8.0 * block.values()(3, q) - block.values()(4, q)) /
                 (12.0 * h);
    acc += wq(i) * std::exp(u(i) * u(i)) * s * std::conj(block.values()(2, j)) * dq;
  }
  return acc;
}

double hermite_function(int j, double x) {
  // stable recurrence on h_j directly
  double h0 = std::pow(kPi, -0.25) * std::exp(-x * x / 2.0);
  if (j == 0) return h0;
  double h1 = std::sqrt(2.0) * x * h0;
  for (int k = 1; k < j; ++k) {
    double h2 = (std::sqrt(2.0) * x * h1 - std::sqrt(static_cast<double>(k)) * h0) /
                std::sqrt(static_cast<double>(k + 1));
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

Vector eval_phi_hermite_route(const WavepacketParams& p, const RealVector& x, int j) {
  if (p.dim() != 1) throw std::invalid_argument("hermite route: d = 1 only");
  Eigen::MatrixXd X(x.size(), 1);
  X.col(0) = x;
  Vector phi0 = eval_phi0(p, X);
  Complex A = p.A(0, 0);
  double absA = std::abs(A);
  Complex u = std::conj(A) / absA;
  Complex phase = std::pow(u, j);
  double lognorm = 0.5 * (j * std::log(2.0) + std::lgamma(j + 1.0));
  Vector out(x.size());
  for (long g = 0; g < x.size(); ++g) {
    double xi = (x(g) - p.a(0)) / (std::sqrt(p.hbar) * absA);
    // physicists' Hermite polynomial by recurrence, log-normalized
    double H0 = 1.0, H1 = 2.0 * xi, H = (j == 0) ? H0 : H1;
    for (int k = 1; k < j; ++k) {
      double H2 = 2.0 * xi * H1 - 2.0 * k * H0;
      H0 = H1;
      H1 = H2;
      H = H2;
    }
    out(g) = phase * H * std::exp(-lognorm) * phi0(g);
  }
  return out;
}

}  // namespace hagprop
