#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "hagprop/multiindex.hpp"

namespace hagprop {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

// Parameters (A, B, a, eta, S, hbar) of the coherent-state family.
// A and B must satisfy  A^t B - B^t A = 0  and  A^* B + B^* A = 2 I.
struct WavepacketParams {
  Matrix A;
  Matrix B;
  RealVector a;
  RealVector eta;
  double S = 0.0;
  double hbar = 1.0;

  // Branch of (det A)^{-1/2}.  Principal branch unless a trajectory has
  // tracked continuity; zero means "compute the principal branch".
  Complex sqrt_det_A_inv = Complex(0.0, 0.0);

  int dim() const { return static_cast<int>(A.rows()); }
  Complex det_branch() const;
};

// Frobenius norms of the two compatibility defects
// (||A^t B - B^t A||, ||A^* B + B^* A - 2 I||).
std::pair<double, double> validate(const WavepacketParams& p);
bool is_valid(const WavepacketParams& p, double tol = 1e-10);

// Deterministic family of valid pairs: A = L^{1/2} U, B = L^{-1/2}(I + iK) U
// with L SPD, K real symmetric, U unitary, all drawn from the given engine.
WavepacketParams random_valid_params(int dim, double hbar, std::mt19937_64& rng);

// phi_0 at the points X (each column of X one d-vector, or a flat vector for d=1).
Vector eval_phi0(const WavepacketParams& p, const Eigen::MatrixXd& X);

// Sampled basis block: values(g, k) = phi_{table[k]}(X_g).  Built by the
// three-term ladder recurrence
//   sqrt(j_m+1) phi_{j+e_m} = sqrt(2/hbar) (A^{-1}(x-a))_m phi_j
//                             - sum_n (A^{-1} conj(A))_{mn} sqrt(j_n) phi_{j-e_n},
// which is exact and preserves the band structure.
class BasisBlock {
 public:
  BasisBlock(const WavepacketParams& p, const Eigen::MatrixXd& X, int degree);

  const WavepacketParams& params() const { return params_; }
  const MultiIndexTable& table() const { return table_; }
  int degree() const { return table_.max_degree(); }
  const Matrix& values() const { return values_; }  // grid x index

  // Extends the block by one degree.
  void raise_all();

 private:
  WavepacketParams params_;
  MultiIndexTable table_;
  Eigen::MatrixXd X_;
  Matrix values_;
  void fill_degree(int n);
};

// Single-step ladder matrices on the table: entries <phi_j, Op phi_q>.
// lowering(m): <phi_j, A_m phi_q> = sqrt(q_m) delta_{j, q-e_m}
// raising(m):  <phi_j, A*_m phi_q> = sqrt(q_m+1) delta_{j, q+e_m}
Matrix lowering_matrix(const MultiIndexTable& table, int m);
Matrix raising_matrix(const MultiIndexTable& table, int m);

// <phi_j, (X-a)_n phi_q> on the table (exact, banded with |deg j - deg q| = 1).
Matrix position_step_matrix(const WavepacketParams& p, const MultiIndexTable& table, int n);
// <phi_j, d/dX_n phi_q> on the table.
Matrix derivative_step_matrix(const WavepacketParams& p, const MultiIndexTable& table, int n);

// <phi_j, (X-a)^m phi_q>: product of single-step matrices assembled on a
// table enlarged by |m|, then truncated; zero whenever ||j|-|q|| > |m|.
Matrix position_matrix(const WavepacketParams& p, const MultiIndexTable& table,
                       const MultiIndex& m);
// <phi_j, D_X^m phi_q>, same construction through the momentum ladder split.
Matrix derivative_matrix(const WavepacketParams& p, const MultiIndexTable& table,
                         const MultiIndex& m);

// Lemma-style bound check: returns (||(X-a)^m P_{|j|<=n}||, bound) with
// bound = (sqrt(2 hbar) d ||A||)^{|m|} ((n+|m|)!/n!)^{1/2}.
std::pair<double, double> projector_norm_check(const WavepacketParams& p,
                                               const MultiIndexTable& table, int n,
                                               const MultiIndex& m);

// --- quadrature oracle -----------------------------------------------------

// Gauss-Hermite nodes/weights for weight exp(-u^2) (Golub-Welsch).
void gauss_hermite(int order, RealVector& nodes, RealVector& weights);

// L2 Gram matrix of the basis up to `degree` under scaled Gauss-Hermite
// quadrature (exact for these polynomial-times-Gaussian integrands when the
// order exceeds the polynomial degree).  Supported for d <= 2.
Matrix quadrature_gram(const WavepacketParams& p, int degree, int order);

// Quadrature value of <phi_j, (X-a)^m phi_q> (d = 1).
Complex quadrature_position_element(const WavepacketParams& p, int j, int q, int m, int order);
// Quadrature value of <phi_j, phi_q'> (d = 1), derivative by the exact ladder
// identity applied inside the integrand is avoided: uses central differences
// on an auxiliary fine grid.  Test-only helper.
Complex quadrature_derivative_element(const WavepacketParams& p, int j, int q, int order);

// d = 1 cross-check: phi_j = (conj(A)/|A|)^j (2^j j!)^{-1/2} H_j(w/(sqrt(hbar)|A|)) phi_0.
Vector eval_phi_hermite_route(const WavepacketParams& p, const RealVector& x, int j);

// Hermite function h_j(x) = (2^j j! sqrt(pi))^{-1/2} H_j(x) exp(-x^2/2).
double hermite_function(int j, double x);

}  // namespace hagprop
