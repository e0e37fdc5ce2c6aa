#include "tvp/statespace.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tvp {

void TimeSeriesData::validate() const {
  if (y.size() < 2) throw UserError("data", "need T >= 2 observations");
  if (X.rows() != y.size()) throw UserError("data", "X rows must equal length of y");
  if (X.cols() < 1) throw UserError("data", "need at least one regressor");
  if (static_cast<int>(labels.size()) != X.cols())
    throw UserError("data", "label count must equal number of regressors");
  if (!y.allFinite()) throw UserError("data", "y contains non-finite values (missing y is not supported)");
  if (!X.allFinite()) throw UserError("data", "X contains non-finite values");
}

void TVPParams::validate(int T) const {
  if (sqrt_theta.size() != beta.size()) throw UserError("params", "beta/sqrt_theta length mismatch");
  if (sigma2.size() != 1 && sigma2.size() != T)
    throw UserError("params", "sigma2 must have length 1 or T");
  if (!beta.allFinite() || !sqrt_theta.allFinite()) throw UserError("params", "non-finite parameters");
  for (int i = 0; i < sigma2.size(); ++i)
    if (!(sigma2[i] >= kSigma2Floor) || !std::isfinite(sigma2[i]))
      throw UserError("params", "sigma2 must be finite and >= 1e-12");
}

StatePath to_centered(const StatePath& tilde, const TVPParams& params) {
  StatePath c = tilde;
  for (int j = 0; j < c.rows(); ++j)
    c.row(j) = (params.beta[j] + params.sqrt_theta[j] * tilde.row(j).array()).matrix();
  return c;
}

StatePath to_noncentered(const StatePath& centered, const TVPParams& params) {
  // Rows with theta_j below the floor have no non-centered representation; they map to 0.
  StatePath nc = StatePath::Zero(centered.rows(), centered.cols());
  for (int j = 0; j < centered.rows(); ++j) {
    const double s = params.sqrt_theta[j];
    if (s * s < kThetaFloor) continue;
    nc.row(j) = ((centered.row(j).array() - params.beta[j]) / s).matrix();
  }
  return nc;
}

double log_normal_pdf(double x, double mean, double var) {
  const double e = x - mean;
  return -0.5 * (std::log(2 * std::numbers::pi * var) + e * e / var);
}

LinearGaussianSSM build_ssm(const TVPParams& params, const TimeSeriesData& data,
                            Parametrization par, const FilterOptions& opt) {
  const int T = data.T(), p = data.p();
  if (params.p() != p) throw UserError("params", "parameter dimension does not match data");
  params.validate(T);
  LinearGaussianSSM m;
  m.y = data.y;
  m.obs_var.resize(T);
  for (int t = 0; t < T; ++t) m.obs_var[t] = params.sigma2_at(t);
  if (par == Parametrization::Centered) {
    m.Z = data.X;
    m.offset = VectorXd::Zero(T);
    m.W = params.theta();
    m.m0 = params.beta;
    m.P0 = opt.diffuse ? MatrixXd(kDiffuseVariance * MatrixXd::Identity(p, p))
                       : MatrixXd(m.W.asDiagonal());
  } else {
    if (opt.diffuse)
      throw UserError("params", "diffuse initialization applies to the centered parametrization only");
    m.Z = data.X * params.sqrt_theta.asDiagonal();
    m.offset = data.X * params.beta;
    m.W = VectorXd::Ones(p);
    m.m0 = VectorXd::Zero(p);
    m.P0 = MatrixXd::Identity(p, p);
  }
  return m;
}

FilterResult kalman_filter(const LinearGaussianSSM& m) {
  const int T = m.T(), p = m.p();
  FilterResult f;
  f.m.resize(T + 1);
  f.P.resize(T + 1);
  f.m_pred.resize(T + 1);
  f.P_pred.resize(T + 1);
  f.y_mean.resize(T);
  f.y_var.resize(T);
  f.loglik_terms.resize(T);
  f.m[0] = m.m0;
  f.P[0] = m.P0;
  f.m_pred[0] = m.m0;
  f.P_pred[0] = m.P0;
  const MatrixXd I = MatrixXd::Identity(p, p);
  double ll = 0;
  for (int t = 1; t <= T; ++t) {
    const VectorXd& mp = f.m[t - 1];
    MatrixXd Pp = f.P[t - 1];
    Pp.diagonal() += m.W;
    const Eigen::RowVectorXd z = m.Z.row(t - 1);
    const double s2 = m.obs_var[t - 1];
    const VectorXd Pz = Pp * z.transpose();
    const double F = z.dot(Pz) + s2;
    const double e = m.y[t - 1] - m.offset[t - 1] - z.dot(mp);
    if (!std::isfinite(F) || !std::isfinite(e) || !(F > 0)) {
      std::ostringstream os;
      os << "Kalman filter: non-finite or non-positive predictive variance at t=" << t;
      throw NumericalError(os.str(), t);
    }
    const VectorXd K = Pz / F;
    // Joseph form keeps the update symmetric positive semi-definite.
    const MatrixXd IKz = I - K * z;
    MatrixXd Pf = IKz * Pp * IKz.transpose() + s2 * K * K.transpose();
    symmetrize(Pf);
    if (!looks_psd(Pf)) {
      std::ostringstream os;
      os << "Kalman filter: covariance lost positive semi-definiteness at t=" << t << "\n" << Pf;
      throw NumericalError(os.str(), t);
    }
    f.m_pred[t] = mp;
    f.P_pred[t] = Pp;
    f.m[t] = mp + K * e;
    f.P[t] = std::move(Pf);
    f.y_mean[t - 1] = m.offset[t - 1] + z.dot(mp);
    f.y_var[t - 1] = F;
    const double li = -0.5 * (std::log(2 * std::numbers::pi * F) + e * e / F);
    f.loglik_terms[t - 1] = li;
    ll += li;
  }
  if (!std::isfinite(ll)) throw NumericalError("Kalman filter: non-finite log-likelihood");
  f.log_likelihood = ll;
  return f;
}

FilterResult kalman_filter(const TVPParams& params, const TimeSeriesData& data,
                           Parametrization par, const FilterOptions& opt) {
  return kalman_filter(build_ssm(params, data, par, opt));
}

SmootherResult kalman_smoother(const LinearGaussianSSM& m, const FilterResult& f) {
  const int T = m.T();
  SmootherResult s;
  s.mean.resize(T + 1);
  s.cov.resize(T + 1);
  s.mean[T] = f.m[T];
  s.cov[T] = f.P[T];
  for (int t = T - 1; t >= 0; --t) {
    const MatrixXd J = f.P[t] * pinv_psd(f.P_pred[t + 1]);
    s.mean[t] = f.m[t] + J * (s.mean[t + 1] - f.m_pred[t + 1]);
    MatrixXd C = f.P[t] + J * (s.cov[t + 1] - f.P_pred[t + 1]) * J.transpose();
    symmetrize(C);
    s.cov[t] = std::move(C);
  }
  return s;
}

SmootherResult kalman_smoother(const TVPParams& params, const TimeSeriesData& data,
                               Parametrization par, const FilterOptions& opt) {
  const LinearGaussianSSM m = build_ssm(params, data, par, opt);
  return kalman_smoother(m, kalman_filter(m));
}

StatePath ffbs_draw(Rng& rng, const LinearGaussianSSM& m) {
  const int T = m.T(), p = m.p();
  const FilterResult f = kalman_filter(m);
  StatePath s(p, T + 1);
  s.col(T) = f.m[T] + psd_factor(f.P[T]) * std_normal_vector(rng, p);
  for (int t = T - 1; t >= 0; --t) {
    const MatrixXd J = f.P[t] * pinv_psd(f.P_pred[t + 1]);
    const VectorXd mean = f.m[t] + J * (s.col(t + 1) - f.m_pred[t + 1]);
    MatrixXd C = f.P[t] - J * f.P_pred[t + 1] * J.transpose();
    symmetrize(C);
    s.col(t) = mean + psd_factor(C) * std_normal_vector(rng, p);
  }
  return s;
}

StatePath ffbs_draw(Rng& rng, const TVPParams& params, const TimeSeriesData& data,
                    Parametrization par, const FilterOptions& opt) {
  return ffbs_draw(rng, build_ssm(params, data, par, opt));
}

BlockTridiag awol_precision(const LinearGaussianSSM& m, VectorXd* linear_term) {
  const int T = m.T(), p = m.p();
  for (int j = 0; j < p; ++j)
    if (!(m.W[j] >= kThetaFloor))
      throw UserError("awol", "AWOL needs strictly positive innovation variances");
  const VectorXd Winv = m.W.cwiseInverse();
  Eigen::LLT<MatrixXd> llt0(m.P0);
  if (llt0.info() != Eigen::Success) throw UserError("awol", "initial covariance must be positive definite");
  const MatrixXd P0inv = llt0.solve(MatrixXd::Identity(p, p));
  BlockTridiag Om;
  Om.diag.resize(T + 1);
  Om.sub.assign(T, MatrixXd(VectorXd(-Winv).asDiagonal()));
  VectorXd c(p * (T + 1));
  Om.diag[0] = P0inv;
  if (T >= 1) Om.diag[0].diagonal() += Winv;
  c.segment(0, p) = P0inv * m.m0;
  for (int t = 1; t <= T; ++t) {
    const Eigen::RowVectorXd z = m.Z.row(t - 1);
    const double w = 1.0 / m.obs_var[t - 1];
    MatrixXd D = w * z.transpose() * z;
    D.diagonal() += (t < T ? 2.0 : 1.0) * Winv;
    Om.diag[t] = std::move(D);
    c.segment(t * p, p) = (w * (m.y[t - 1] - m.offset[t - 1])) * z.transpose();
  }
  if (linear_term) *linear_term = std::move(c);
  return Om;
}

StatePath awol_draw(Rng& rng, const LinearGaussianSSM& m) {
  VectorXd c;
  const BlockTridiag Om = awol_precision(m, &c);
  const VectorXd x = sample_block_tridiag(rng, Om, c);
  return Eigen::Map<const MatrixXd>(x.data(), m.p(), m.T() + 1);
}

StatePath awol_draw(Rng& rng, const TVPParams& params, const TimeSeriesData& data,
                    Parametrization par, const FilterOptions& opt) {
  if (par == Parametrization::Centered && !opt.diffuse) {
    // Exact equivalence via the linear map between parametrizations; this also
    // covers theta_j = 0, where the centered precision does not exist.
    const StatePath tilde =
        awol_draw(rng, build_ssm(params, data, Parametrization::NonCentered, {}));
    return to_centered(tilde, params);
  }
  return awol_draw(rng, build_ssm(params, data, par, opt));
}

Gaussian1 one_step_predictive(const TVPParams& params, const TimeSeriesData& data, int t,
                              Parametrization par, const FilterOptions& opt) {
  if (t < 1 || t > data.T()) throw UserError("predictive", "t must lie in 1..T");
  TimeSeriesData head;
  head.y = data.y.head(t);
  head.X = data.X.topRows(t);
  head.labels = data.labels;
  TVPParams pr = params;
  if (params.sigma2.size() > 1) pr.sigma2 = params.sigma2.head(t);
  const FilterResult f = kalman_filter(pr, head, par, opt);
  return {f.y_mean[t - 1], f.y_var[t - 1]};
}

}  // namespace tvp
