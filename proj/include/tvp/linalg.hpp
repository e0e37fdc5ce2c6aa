#pragma once
#include <Eigen/Dense>
#include <vector>

#include "tvp/rng.hpp"

namespace tvp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline void symmetrize(MatrixXd& A) { A = 0.5 * (A + A.transpose()).eval(); }

// Lower factor L with L L' = A for a symmetric PSD matrix; falls back to a
// clamped eigen-decomposition when A is (numerically) singular.
MatrixXd psd_factor(const MatrixXd& A);

// Moore-Penrose inverse of a symmetric PSD matrix (relative cutoff rtol).
MatrixXd pinv_psd(const MatrixXd& A, double rtol = 1e-12);

// Cheap plausibility check for a covariance: nonnegative diagonal within tol
// and |A_ij| <= sqrt(A_ii A_jj) (1 + tol).
bool looks_psd(const MatrixXd& A, double tol = 1e-8);

VectorXd std_normal_vector(Rng& rng, int n);

// Symmetric block-tridiagonal matrix: diag[t] = block (t,t), sub[t] = block (t+1,t).
struct BlockTridiag {
  std::vector<MatrixXd> diag;
  std::vector<MatrixXd> sub;

  int blocks() const { return static_cast<int>(diag.size()); }
  int block_size() const { return diag.empty() ? 0 : static_cast<int>(diag[0].rows()); }
  MatrixXd dense() const;
};

// Draw x ~ N(Omega^{-1} c, Omega^{-1}) for block-tridiagonal SPD Omega via one
// banded Cholesky factorization. `c` is stacked by block. Throws
// NumericalError if a pivot block is not positive definite.
VectorXd sample_block_tridiag(Rng& rng, const BlockTridiag& Omega, const VectorXd& c);
// Mean only (same factorization, no noise).
VectorXd solve_block_tridiag(const BlockTridiag& Omega, const VectorXd& c);

// Scalar tridiagonal precision: diagonal d (n), off-diagonal e (n-1).
VectorXd sample_tridiag(Rng& rng, const VectorXd& d, const VectorXd& e, const VectorXd& c);

}  // namespace tvp
