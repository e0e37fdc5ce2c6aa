#pragma once
// Triangular multivariate systems built from univariate TVP equations:
//   Cholesky-SV:  y_it = sum_{k<i} b_ik,t y_kt + eps_it               (no intercept)
//   TVP-VAR:      y_it = x_t beta_it + sum_{k<i} a_ik,t eta_kt + eps_it
// with x_t = (1, y_{t-1}', ..., y_{t-r}') and eta_k the current residual of equation k.
#include <string>
#include <vector>

#include "tvp/sampler.hpp"

namespace tvp {

struct MultiTimeSeries {
  MatrixXd Y;  // T x q
  std::vector<std::string> names;

  int T() const { return static_cast<int>(Y.rows()); }
  int q() const { return static_cast<int>(Y.cols()); }
  void validate(int lag = 0) const;
};

// Pure SV (or homoscedastic) fit of a series with no regressors.
DrawsStore run_pure_sigma(const VectorXd& y, const SigmaPrior& sp, const ChainControl& ctl);

// Design of equation i (0-based) of the Cholesky system: columns y_0..y_{i-1}.
TimeSeriesData cholesky_equation_data(const MultiTimeSeries& d, int i);

struct SystemFit {
  std::string kind;  // cholesky_sv | tvp_var
  int lag = 0;
  std::vector<std::string> order;  // variable ordering used
  std::vector<DrawsStore> eq;       // one store per equation, draws aligned by index
};

// specs: one per equation or a single spec reused for all rows.
SystemFit fit_cholesky_sv(const MultiTimeSeries& d, const std::vector<ModelSpec>& specs,
                          const ChainControl& ctl, int threads = 1);

// Shared VAR regressors x_t for t = r..T-1 (rows), p = q r + 1.
MatrixXd var_design(const MatrixXd& Y, int lag);
SystemFit fit_tvp_var(const MultiTimeSeries& d, int lag, const std::vector<ModelSpec>& specs,
                      const ChainControl& ctl);

// (I - B)^{-1} for strictly lower-triangular B by forward substitution.
MatrixXd unit_lower_inverse(const MatrixXd& B);
// Sigma = A Diag(d) A'.
MatrixXd sigma_from_factors(const MatrixXd& A, const VectorXd& d);

// Sigma_t draws (t = 1..T of the fitted sample) from a fit with stored paths.
std::vector<MatrixXd> sigma_t_draws(const SystemFit& fit, int t);

}  // namespace tvp
