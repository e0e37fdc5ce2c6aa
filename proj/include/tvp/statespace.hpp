#pragma once
// Linear-Gaussian random-walk state-space primitives for the TVP regression
//   centered:      beta_t = beta_{t-1} + w_t, w_t ~ N(0, Diag theta), beta_0 ~ N(beta, Diag theta)
//   non-centered:  tb_t = tb_{t-1} + u_t, u_t ~ N(0, I), tb_0 ~ N(0, I),
//                  y_t = x_t beta + x_t Diag(sqrt_theta) tb_t + eps_t
#include <vector>

#include "tvp/linalg.hpp"
#include "tvp/rng.hpp"
#include "tvp/types.hpp"

namespace tvp {

struct FilterOptions {
  // Centered parametrization only: replace beta_0 ~ N(beta, Q) by N(beta, 1e5 I).
  bool diffuse = false;
};

// Generic random-walk model: y_t = offset_t + Z_t s_t + e_t, e_t ~ N(0, obs_var_t),
// s_t = s_{t-1} + N(0, Diag W), s_0 ~ N(m0, P0).
struct LinearGaussianSSM {
  MatrixXd Z;
  VectorXd offset;
  VectorXd obs_var;
  VectorXd W;
  VectorXd m0;
  MatrixXd P0;
  VectorXd y;

  int T() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(W.size()); }
};

LinearGaussianSSM build_ssm(const TVPParams& params, const TimeSeriesData& data,
                            Parametrization par, const FilterOptions& opt = {});

struct FilterResult {
  // Index t = 0..T; m[0], P[0] are the initial-state moments.
  std::vector<VectorXd> m;
  std::vector<MatrixXd> P;
  // Index t = 1..T (entry 0 duplicates the initial moments).
  std::vector<VectorXd> m_pred;
  std::vector<MatrixXd> P_pred;
  // One-step predictive moments of y_t, stored at index t-1.
  VectorXd y_mean;
  VectorXd y_var;
  VectorXd loglik_terms;
  double log_likelihood = 0;
};

struct SmootherResult {
  std::vector<VectorXd> mean;  // t = 0..T
  std::vector<MatrixXd> cov;
};

struct Gaussian1 {
  double mean;
  double var;
};

FilterResult kalman_filter(const LinearGaussianSSM& m);
FilterResult kalman_filter(const TVPParams& params, const TimeSeriesData& data,
                           Parametrization par, const FilterOptions& opt = {});

SmootherResult kalman_smoother(const LinearGaussianSSM& m, const FilterResult& f);
SmootherResult kalman_smoother(const TVPParams& params, const TimeSeriesData& data,
                               Parametrization par = Parametrization::Centered,
                               const FilterOptions& opt = {});

StatePath ffbs_draw(Rng& rng, const LinearGaussianSSM& m);
StatePath ffbs_draw(Rng& rng, const TVPParams& params, const TimeSeriesData& data,
                    Parametrization par, const FilterOptions& opt = {});

// Joint posterior precision of s_{0:T} (block tridiagonal) and its linear term.
BlockTridiag awol_precision(const LinearGaussianSSM& m, VectorXd* linear_term = nullptr);
StatePath awol_draw(Rng& rng, const LinearGaussianSSM& m);
StatePath awol_draw(Rng& rng, const TVPParams& params, const TimeSeriesData& data,
                    Parametrization par, const FilterOptions& opt = {});

// Predictive of y_t given y_{1:t-1}, 1 <= t <= T.
Gaussian1 one_step_predictive(const TVPParams& params, const TimeSeriesData& data, int t,
                              Parametrization par = Parametrization::NonCentered,
                              const FilterOptions& opt = {});

double log_normal_pdf(double x, double mean, double var);

}  // namespace tvp
