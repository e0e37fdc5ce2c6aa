#include "tvp/linalg.hpp"

#include <cmath>

#include "tvp/types.hpp"

namespace tvp {

MatrixXd psd_factor(const MatrixXd& A) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    MatrixXd L = llt.matrixL();
    if (L.allFinite()) return L;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

MatrixXd pinv_psd(const MatrixXd& A, double rtol) {
  Eigen::LLT<MatrixXd> llt(A);
  const int n = static_cast<int>(A.rows());
  if (llt.info() == Eigen::Success) {
    // Guard against near-singular matrices that LLT still accepts.
    const MatrixXd L = llt.matrixL();
    const double dmin = L.diagonal().minCoeff(), dmax = L.diagonal().maxCoeff();
    if (dmin > 0 && dmin * dmin > rtol * dmax * dmax)
      return llt.solve(MatrixXd::Identity(n, n));
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  const VectorXd& ev = es.eigenvalues();
  const double cut = rtol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  VectorXd inv(n);
  for (int i = 0; i < n; ++i) inv[i] = ev[i] > cut && ev[i] > 0 ? 1.0 / ev[i] : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

bool looks_psd(const MatrixXd& A, double tol) {
  const int n = static_cast<int>(A.rows());
  double scale = 0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A(i, i)));
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(A(i, i)) || A(i, i) < -tol * std::max(scale, 1.0)) return false;
    for (int j = 0; j < i; ++j) {
      const double b = std::sqrt(std::max(A(i, i), 0.0) * std::max(A(j, j), 0.0));
      if (std::abs(A(i, j)) > b * (1 + tol) + tol * scale) return false;
    }
  }
  return true;
}

VectorXd std_normal_vector(Rng& rng, int n) {
  VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = rng.normal();
  return u;
}

MatrixXd BlockTridiag::dense() const {
  const int n = blocks(), k = block_size();
  MatrixXd D = MatrixXd::Zero(n * k, n * k);
  for (int t = 0; t < n; ++t) D.block(t * k, t * k, k, k) = diag[t];
  for (int t = 0; t + 1 < n; ++t) {
    D.block((t + 1) * k, t * k, k, k) = sub[t];
    D.block(t * k, (t + 1) * k, k, k) = sub[t].transpose();
  }
  return D;
}

namespace {

struct BandChol {
  std::vector<MatrixXd> L;    // diagonal lower factors
  std::vector<MatrixXd> Sub;  // L_{t+1,t}
};

BandChol factor(const BlockTridiag& Om) {
  const int n = Om.blocks();
  BandChol f;
  f.L.resize(n);
  f.Sub.resize(n > 0 ? n - 1 : 0);
  MatrixXd S = Om.diag[0];
  for (int t = 0; t < n; ++t) {
    Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
      throw NumericalError("banded Cholesky: pivot block not positive definite", t);
    f.L[t] = llt.matrixL();
    if (t + 1 < n) {
      // Sub = Omega_{t+1,t} L_t^{-T}
      MatrixXd B = f.L[t].triangularView<Eigen::Lower>().solve(Om.sub[t].transpose());
      f.Sub[t] = B.transpose();
      S = Om.diag[t + 1] - f.Sub[t] * f.Sub[t].transpose();
    }
  }
  return f;
}

VectorXd forward(const BandChol& f, const VectorXd& c, int k) {
  const int n = static_cast<int>(f.L.size());
  VectorXd v(n * k);
  for (int t = 0; t < n; ++t) {
    VectorXd r = c.segment(t * k, k);
    if (t > 0) r -= f.Sub[t - 1] * v.segment((t - 1) * k, k);
    v.segment(t * k, k) = f.L[t].triangularView<Eigen::Lower>().solve(r);
  }
  return v;
}

VectorXd backward(const BandChol& f, const VectorXd& r, int k) {
  const int n = static_cast<int>(f.L.size());
  VectorXd x(n * k);
  for (int t = n - 1; t >= 0; --t) {
    VectorXd q = r.segment(t * k, k);
    if (t + 1 < n) q -= f.Sub[t].transpose() * x.segment((t + 1) * k, k);
    x.segment(t * k, k) = f.L[t].transpose().triangularView<Eigen::Upper>().solve(q);
  }
  return x;
}

}  // namespace

VectorXd sample_block_tridiag(Rng& rng, const BlockTridiag& Omega, const VectorXd& c) {
  const int k = Omega.block_size();
  BandChol f = factor(Omega);
  VectorXd v = forward(f, c, k);
  v += std_normal_vector(rng, static_cast<int>(v.size()));
  return backward(f, v, k);
}

VectorXd solve_block_tridiag(const BlockTridiag& Omega, const VectorXd& c) {
  const int k = Omega.block_size();
  BandChol f = factor(Omega);
  return backward(f, forward(f, c, k), k);
}

VectorXd sample_tridiag(Rng& rng, const VectorXd& d, const VectorXd& e, const VectorXd& c) {
  const int n = static_cast<int>(d.size());
  VectorXd l(n), s(n > 0 ? n - 1 : 0), v(n), x(n);
  double piv = d[0];
  for (int t = 0; t < n; ++t) {
    if (!(piv > 0)) throw NumericalError("tridiagonal Cholesky: non-positive pivot", t);
    l[t] = std::sqrt(piv);
    if (t + 1 < n) {
      s[t] = e[t] / l[t];
      piv = d[t + 1] - s[t] * s[t];
    }
  }
  for (int t = 0; t < n; ++t) {
    double r = c[t];
    if (t > 0) r -= s[t - 1] * v[t - 1];
    v[t] = r / l[t];
  }
  for (int t = 0; t < n; ++t) v[t] += rng.normal();
  for (int t = n - 1; t >= 0; --t) {
    double q = v[t];
    if (t + 1 < n) q -= s[t] * x[t + 1];
    x[t] = q / l[t];
  }
  return x;
}

}  // namespace tvp
