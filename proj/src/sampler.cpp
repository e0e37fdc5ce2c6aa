#include "tvp/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tvp/special.hpp"
#include "tvp/spike_slab.hpp"

namespace tvp {

using nlohmann::json;

namespace {

constexpr double kScaleFloor = 1e-200;  // keeps GIG arguments and prior precisions finite
constexpr double kAsisThetaFloor = 1e-280;  // stays clear of underflow in 1/sqrt_theta

double inv_gamma_draw(Rng& rng, double shape, double scale) { return scale / rng.gamma(shape, 1.0); }

bool is_ig(const ModelSpec& spec) { return std::holds_alternative<InverseGammaPrior>(spec.prior.theta); }

const TripleGammaPrior* theta_tg(const ModelSpec& spec) { return std::get_if<TripleGammaPrior>(&spec.prior.theta); }
const TripleGammaPrior* beta_tg(const ModelSpec& spec) { return std::get_if<TripleGammaPrior>(&spec.prior.beta); }

double sample_var(const VectorXd& y) {
  const double m = y.mean();
  return std::max((y.array() - m).square().sum() / std::max<int>(1, y.size() - 1), 1e-6);
}

// Draw x ~ N(Q^{-1} c, Q^{-1}).
VectorXd gaussian_from_precision(Rng& rng, const MatrixXd& Q, const VectorXd& c, const char* what) {
  Eigen::LLT<MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q);
    std::ostringstream os;
    os << what << ": regression cross-product is singular (condition number "
       << es.eigenvalues().maxCoeff() / std::max(es.eigenvalues().minCoeff(), 1e-300) << ")";
    throw NumericalError(os.str());
  }
  const VectorXd mean = llt.solve(c);
  const VectorXd z = std_normal_vector(rng, static_cast<int>(c.size()));
  return mean + llt.matrixU().solve(z);
}

double sigma_ridge_scale(bool scaled, const SamplerState& s) { return scaled ? s.params.sigma2[0] : 1.0; }

}  // namespace

bool asis_enabled(const ModelSpec& spec) {
  if (spec.opt.static_theta || spec.prior.is_spike_slab()) return false;
  if (is_ig(spec)) return true;  // theta is only updated in the centered step
  if (spec.opt.asis >= 0) return spec.opt.asis == 1;
  return theta_tg(spec) != nullptr;
}

double theta_prior_var(const SamplerState& s, const ModelSpec& spec, int j) {
  if (auto* r = std::get_if<RidgePrior>(&spec.prior.theta)) return r->tau * sigma_ridge_scale(r->scale_by_sigma2, s);
  if (theta_tg(spec)) return s.theta_scales->psi[j];
  throw UserError("sampler", "sqrt_theta has no Gaussian prior variance under this prior");
}

double beta_prior_var(const SamplerState& s, const ModelSpec& spec, int j) {
  if (auto* n = std::get_if<NormalBetaPrior>(&spec.prior.beta)) return n->tau * sigma_ridge_scale(n->scale_by_sigma2, s);
  return s.beta_scales->psi[j];
}

SamplerState initial_state(const TimeSeriesData& data, const ModelSpec& spec) {
  data.validate();
  const int T = data.T(), p = data.p();
  SamplerState s;
  s.path = StatePath::Zero(p, T + 1);
  s.params.beta = VectorXd::Zero(p);
  s.params.sqrt_theta = VectorXd::Constant(p, spec.opt.static_theta ? 0.0 : 0.1);
  const double v = sample_var(data.y);
  s.params.sigma2 = VectorXd::Constant(1, v);
  s.C0 = spec.prior.sigma.C0;
  if (auto* tg = theta_tg(spec)) s.theta_scales = initial_scale_state(*tg, p);
  if (auto* tg = beta_tg(spec)) s.beta_scales = initial_scale_state(*tg, p);
  if (spec.prior.sigma.sv) {
    s.sv = initial_sv_state(T, std::log(v));
    s.params.sigma2 = s.sv->sigma2();
  }
  if (auto* ss = std::get_if<SpikeSlabPrior>(&spec.prior.theta)) {
    SpikeSlabState st;
    const bool full = spec.opt.init_model != "static";
    st.code.assign(p, full && !spec.opt.static_theta ? 2 : 1);
    st.pi_delta = ss->pi_hierarchical ? ss->a0_delta / (ss->a0_delta + ss->b0_delta) : ss->pi_delta;
    st.pi_gamma = ss->pi_hierarchical ? ss->a0_gamma / (ss->a0_gamma + ss->b0_gamma) : ss->pi_gamma;
    st.tau2 = VectorXd::Ones(p);
    st.xi2 = VectorXd::Ones(p);
    for (int j = 0; j < p; ++j)
      if (st.code[j] < 2) s.params.sqrt_theta[j] = 0.0;
    s.ss = std::move(st);
  }
  return s;
}

void draw_path(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec) {
  const int T = data.T(), p = data.p();
  if (spec.opt.static_theta) {
    s.path.setZero(p, T + 1);
    return;
  }
  if (spec.opt.prior_only) {
    s.path.resize(p, T + 1);
    for (int j = 0; j < p; ++j) {
      s.path(j, 0) = rng.normal();
      for (int t = 1; t <= T; ++t) s.path(j, t) = s.path(j, t - 1) + rng.normal();
    }
    return;
  }
  const LinearGaussianSSM m = build_ssm(s.params, data, Parametrization::NonCentered);
  s.path = spec.opt.path == PathSampler::AWOL ? awol_draw(rng, m) : ffbs_draw(rng, m);
}

VectorXd residuals(const SamplerState& s, const TimeSeriesData& data) {
  const int T = data.T(), p = data.p();
  VectorXd e = data.y - data.X * s.params.beta;
  for (int j = 0; j < p; ++j) {
    const double st = s.params.sqrt_theta[j];
    if (st == 0) continue;
    e.array() -= st * data.X.col(j).array() * s.path.row(j).segment(1, T).transpose().array();
  }
  return e;
}

void draw_sigma_and_alpha(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec) {
  const int T = data.T(), p = data.p();
  const bool ig = is_ig(spec), stat = spec.opt.static_theta;
  const bool with_theta = !(ig || stat);
  const int k = with_theta ? 2 * p : p;
  const SigmaPrior& sp = spec.prior.sigma;

  MatrixXd Z(T, k);
  Z.leftCols(p) = data.X;
  VectorXd yt = data.y;
  for (int j = 0; j < p; ++j) {
    const VectorXd zj = data.X.col(j).cwiseProduct(s.path.row(j).segment(1, T).transpose());
    if (with_theta)
      Z.col(p + j) = zj;
    else if (!stat)
      yt -= s.params.sqrt_theta[j] * zj;
  }
  // Unscaled prior variances and whether they carry sigma2.
  VectorXd v(k);
  std::vector<bool> scaled(k, false);
  const auto* nb = std::get_if<NormalBetaPrior>(&spec.prior.beta);
  const auto* rp = std::get_if<RidgePrior>(&spec.prior.theta);
  for (int j = 0; j < p; ++j) {
    v[j] = nb ? nb->tau : s.beta_scales->psi[j];
    scaled[j] = nb && nb->scale_by_sigma2;
    if (with_theta) {
      v[p + j] = rp ? rp->tau : s.theta_scales->psi[j];
      scaled[p + j] = rp && rp->scale_by_sigma2;
    }
  }
  v = v.cwiseMax(kScaleFloor);
  VectorXd alpha(k);
  alpha.head(p) = s.params.beta;
  if (with_theta) alpha.tail(p) = s.params.sqrt_theta;

  if (spec.opt.prior_only) {
    if (s.sv) {
      *s.sv = sample_sv_prior(rng, T, sp.svp);
      s.params.sigma2 = s.sv->sigma2();
    } else {
      s.params.sigma2[0] = std::max(inv_gamma_draw(rng, sp.c0, s.C0), kSigma2Floor);
    }
    for (int i = 0; i < k; ++i)
      alpha[i] = std::sqrt(v[i] * (scaled[i] ? s.params.sigma2[0] : 1.0)) * rng.normal();
  } else if (!s.sv) {
    const bool conjugate = std::all_of(scaled.begin(), scaled.end(), [](bool b) { return b; });
    const VectorXd Zy = Z.transpose() * yt;
    const MatrixXd ZZ = Z.transpose() * Z;
    double sigma2;
    if (conjugate) {
      // sigma2 | z, y with alpha integrated out
      MatrixXd Q = ZZ;
      Q.diagonal() += v.cwiseInverse();
      Eigen::LLT<MatrixXd> llt(Q);
      if (llt.info() != Eigen::Success) throw NumericalError("conjugate regression: precision not positive definite");
      const double ss = std::max(yt.squaredNorm() - Zy.dot(llt.solve(Zy)), 0.0);
      sigma2 = inv_gamma_draw(rng, sp.c0 + 0.5 * T, s.C0 + 0.5 * ss);
    } else {
      const double ssr = (yt - Z * alpha).squaredNorm();
      double shape = sp.c0 + 0.5 * T, scale = s.C0 + 0.5 * ssr;
      for (int i = 0; i < k; ++i)
        if (scaled[i]) {
          shape += 0.5;
          scale += 0.5 * alpha[i] * alpha[i] / v[i];
        }
      sigma2 = inv_gamma_draw(rng, shape, scale);
    }
    sigma2 = std::max(sigma2, kSigma2Floor);
    s.params.sigma2[0] = sigma2;
    MatrixXd Q = ZZ / sigma2;
    for (int i = 0; i < k; ++i) Q(i, i) += 1.0 / (v[i] * (scaled[i] ? sigma2 : 1.0));
    alpha = gaussian_from_precision(rng, Q, Zy / sigma2, "alpha step");
  } else {
    sv_sweep(rng, *s.sv, residuals(s, data), sp.svp);
    s.params.sigma2 = s.sv->sigma2().cwiseMax(kSigma2Floor);
    const VectorXd w = s.params.sigma2.cwiseInverse();
    MatrixXd Q = Z.transpose() * w.asDiagonal() * Z;
    Q.diagonal() += v.cwiseInverse();
    alpha = gaussian_from_precision(rng, Q, Z.transpose() * w.cwiseProduct(yt), "alpha step");
  }
  s.params.beta = alpha.head(p);
  if (with_theta) s.params.sqrt_theta = alpha.tail(p);
  if (stat) s.params.sqrt_theta.setZero();
  if (!s.sv && sp.hierarchical_C0) s.C0 = rng.gamma(sp.g0 + sp.c0, sp.g1 + 1.0 / s.params.sigma2[0]);
}

void asis_interweave(Rng& rng, SamplerState& s, const ModelSpec& spec) {
  const int p = s.params.p(), T = static_cast<int>(s.path.cols()) - 1;
  const auto* ig = std::get_if<InverseGammaPrior>(&spec.prior.theta);
  for (int j = 0; j < p; ++j) {
    const double st = s.params.sqrt_theta[j], b = s.params.beta[j];
    // centered path beta_jt = b + st tb_jt; increments taken on the non-centered path so that
    // tiny scales do not cancel against b
    const Eigen::RowVectorXd z = s.path.row(j);
    double S = z[0] * z[0];
    for (int t = 1; t <= T; ++t) S += (z[t] - z[t - 1]) * (z[t] - z[t - 1]);
    S = std::max(st * st * S, 1e-300);
    double th = ig ? inv_gamma_draw(rng, ig->s0 + 0.5 * (T + 1), ig->S0 + 0.5 * S)
                   : sample_gig(rng, {-0.5 * T, 1.0 / std::max(theta_prior_var(s, spec, j), kScaleFloor), S});
    if (!(th >= kAsisThetaFloor)) {
      th = kAsisThetaFloor;
      ++s.theta_clamped;
    }
    const double vb = std::max(beta_prior_var(s, spec, j), kScaleFloor);
    const double prec = 1.0 / vb + 1.0 / th;
    // new location bn = b + d drawn as an offset: the posterior mean is (b + st z_0) vb / (vb + th)
    const double d = (st * z[0] * vb - b * th) / (vb + th) + rng.normal() / std::sqrt(prec);
    double sign;
    if (spec.opt.keep_sign)
      sign = st < 0 ? -1.0 : 1.0;
    else
      sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double stn = sign * std::sqrt(th);
    s.params.beta[j] = b + d;
    s.params.sqrt_theta[j] = stn;
    s.path.row(j) = ((st * z.array() - d) / stn).matrix();
  }
}

namespace {

void update_branch_locals(Rng& rng, const TripleGammaPrior& pr, ScaleState& sc, const VectorXd& x) {
  const bool lasso = pr.alias == "lasso" && !pr.learn_a;
  for (int j = 0; j < x.size(); ++j) {
    const double x2 = std::max(x[j] * x[j], kScaleFloor);
    double psi;
    if (lasso) {
      // psi = tau u, u ~ Exp(1) a priori  =>  u | x ~ GIG(1/2, 2, x^2 / tau)
      const double tau = 2.0 / sc.B2;
      psi = tau * sample_gig(rng, {0.5, 2.0, x2 / tau});
    } else {
      psi = sample_gig(rng, {sc.a - 0.5, 2.0 * sc.rate(j), x2});
    }
    sc.psi[j] = std::max(psi, kScaleFloor);
    if (sc.finite_c) sc.kappa2[j] = rng.gamma(sc.a + sc.c, 0.5 * sc.a * sc.psi[j] + sc.c / sc.B2);
  }
}

double branch_target(const TripleGammaPrior& pr, const ScaleState& sc) {
  double lp = 0;
  for (int j = 0; j < sc.psi.size(); ++j) {
    lp += log_gamma_density(sc.psi[j], sc.a, sc.rate(j));
    if (sc.finite_c) lp += log_gamma_density(sc.kappa2[j], sc.c, sc.c / sc.B2);
  }
  return lp + log_hyperprior_density(pr, sc);
}

void adapt_step(MHStat& mh, bool accepted, double target) {
  ++mh.adapt_n;
  const double gain = std::min(1.0, 5.0 / std::sqrt(static_cast<double>(mh.adapt_n)));
  mh.log_step += gain * ((accepted ? 1.0 : 0.0) - target);
  mh.log_step = std::clamp(mh.log_step, -10.0, 3.0);
}

double logit(double u) { return std::log(u) - std::log1p(-u); }
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void update_branch_globals(Rng& rng, const TripleGammaPrior& pr, ScaleState& sc, BranchMH& mh,
                           bool adapt, double target) {
  const int n = static_cast<int>(sc.psi.size());
  if (pr.learn_B2) {
    if (!sc.finite_c)
      sc.B2 = rng.gamma(pr.d1 + n * sc.a, pr.d2 + 0.5 * sc.a * sc.psi.sum());
    else
      sc.B2 = sample_gig(rng, {pr.d1 - n * sc.c, 2.0 * pr.d2, std::max(2.0 * sc.c * sc.kappa2.sum(), kScaleFloor)});
  }
  auto mh_step = [&](MHStat& st, auto make_candidate, auto log_jac) {
    ScaleState cand = sc;
    const double cur = branch_target(pr, sc) + log_jac(sc);
    if (!make_candidate(cand, std::exp(st.log_step) * rng.normal())) {
      ++st.proposed;
      if (adapt) adapt_step(st, false, target);
      return;
    }
    const double nxt = branch_target(pr, cand) + log_jac(cand);
    ++st.proposed;
    const bool acc = std::log(rng.uniform()) < nxt - cur;
    if (acc) {
      sc = std::move(cand);
      ++st.accepted;
    }
    if (adapt) adapt_step(st, acc, target);
  };
  if (pr.learn_phi) {
    mh_step(
        mh.phi,
        [&](ScaleState& c, double eps) {
          const double phi = c.phi() * std::exp(eps);
          if (!(phi > 0) || !std::isfinite(phi)) return false;
          c.B2 = 2 * c.c / (c.a * phi);
          return true;
        },
        [](const ScaleState& c) { return std::log(c.phi()); });
  }
  if (pr.learn_a) {
    mh_step(
        mh.a,
        [&](ScaleState& c, double eps) {
          const double phi = c.finite_c ? c.phi() : 0.0;
          const double a = 0.5 * expit(logit(2 * c.a) + eps);
          if (!(a > 0 && a < 0.5)) return false;
          c.a = a;
          if (pr.learn_phi) c.B2 = 2 * c.c / (c.a * phi);
          return true;
        },
        [](const ScaleState& c) { return std::log(2 * c.a) + std::log1p(-2 * c.a); });
  }
  if (pr.learn_c) {
    mh_step(
        mh.c,
        [&](ScaleState& c, double eps) {
          const double phi = c.phi();
          const double cc = 0.5 * expit(logit(2 * c.c) + eps);
          if (!(cc > 0 && cc < 0.5)) return false;
          c.c = cc;
          if (pr.learn_phi) c.B2 = 2 * c.c / (c.a * phi);
          return true;
        },
        [](const ScaleState& c) { return std::log(2 * c.c) + std::log1p(-2 * c.c); });
  }
}

}  // namespace

void update_local_scales(Rng& rng, SamplerState& s, const ModelSpec& spec) {
  if (auto* tg = theta_tg(spec)) update_branch_locals(rng, *tg, *s.theta_scales, s.params.sqrt_theta);
  if (auto* tg = beta_tg(spec)) update_branch_locals(rng, *tg, *s.beta_scales, s.params.beta);
}

void update_globals(Rng& rng, SamplerState& s, const ModelSpec& spec, bool adapt) {
  if (auto* tg = theta_tg(spec))
    update_branch_globals(rng, *tg, *s.theta_scales, s.theta_mh, adapt, spec.opt.target_accept);
  if (auto* tg = beta_tg(spec))
    update_branch_globals(rng, *tg, *s.beta_scales, s.beta_mh, adapt, spec.opt.target_accept);
}

void ridge_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec) {
  draw_path(rng, s, data, spec);
  draw_sigma_and_alpha(rng, s, data, spec);
}

void shrinkage_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec,
                     bool adapt) {
  draw_path(rng, s, data, spec);
  draw_sigma_and_alpha(rng, s, data, spec);
  if (asis_enabled(spec)) asis_interweave(rng, s, spec);
  update_local_scales(rng, s, spec);
  update_globals(rng, s, spec, adapt);
}

void gibbs_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec, bool adapt) {
  ++s.iteration;
  if (spec.prior.is_spike_slab()) {
    spike_slab_sweep(rng, s, data, spec);
  } else if (std::holds_alternative<RidgePrior>(spec.prior.theta) && !asis_enabled(spec) &&
             !beta_tg(spec)) {
    ridge_sweep(rng, s, data, spec);
  } else {
    shrinkage_sweep(rng, s, data, spec, adapt);
  }
}

SamplerState sample_prior_state(Rng& rng, const ModelSpec& spec, int T, int p) {
  const PriorConfig& pc = spec.prior;
  SamplerState s;
  s.params.beta = VectorXd::Zero(p);
  s.params.sqrt_theta = VectorXd::Zero(p);
  s.params.sigma2 = VectorXd::Ones(1);
  double sigma2 = 1;
  if (pc.sigma.sv) {
    s.sv = sample_sv_prior(rng, T, pc.sigma.svp);
    s.params.sigma2 = s.sv->sigma2();
  } else {
    s.C0 = pc.sigma.hierarchical_C0 ? rng.gamma(pc.sigma.g0, pc.sigma.g1) : pc.sigma.C0;
    sigma2 = std::max(inv_gamma_draw(rng, pc.sigma.c0, s.C0), kSigma2Floor);
    s.params.sigma2[0] = sigma2;
  }
  if (auto* r = std::get_if<RidgePrior>(&pc.theta)) {
    s.params.sqrt_theta = sample_ridge(rng, *r, p, sigma2);
  } else if (auto* ig = std::get_if<InverseGammaPrior>(&pc.theta)) {
    for (int j = 0; j < p; ++j) {
      const double th = inv_gamma_draw(rng, ig->s0, ig->S0);
      s.params.sqrt_theta[j] = (rng.uniform() < 0.5 ? -1 : 1) * std::sqrt(th);
    }
  } else if (auto* tg = std::get_if<TripleGammaPrior>(&pc.theta)) {
    HierarchyDraw d = sample_shrinkage_hierarchy(rng, *tg, p);
    s.params.sqrt_theta = d.x;
    s.theta_scales = d.scales;
  } else {
    const auto& ss = std::get<SpikeSlabPrior>(pc.theta);
    if (ss.slab == SlabKind::Fractional)
      throw UserError("prior", "the fractional slab depends on the data and has no prior simulation");
    SpikeSlabState st;
    st.pi_delta = ss.pi_hierarchical ? rng.beta(ss.a0_delta, ss.b0_delta) : ss.pi_delta;
    st.pi_gamma = ss.pi_hierarchical ? rng.beta(ss.a0_gamma, ss.b0_gamma) : ss.pi_gamma;
    st.code.resize(p);
    st.tau2 = VectorXd::Ones(p);
    st.xi2 = VectorXd::Ones(p);
    if (ss.slab == SlabKind::StudentT) {
      st.lambda2 = rng.gamma(ss.a_lambda, ss.a_lambda);
      st.kappa2 = rng.gamma(ss.a_kappa, ss.a_kappa);
      for (int j = 0; j < p; ++j) {
        st.tau2[j] = rng.gamma(ss.a_tau, ss.a_tau);
        st.xi2[j] = rng.gamma(ss.a_xi, ss.a_xi);
      }
    }
    for (int j = 0; j < p; ++j) {
      if (rng.uniform() < st.pi_gamma)
        st.code[j] = 2;
      else
        st.code[j] = rng.uniform() < st.pi_delta ? 1 : 0;
    }
    const VectorXd var = slab_variances(st.code, ss, &st);
    int i = 0;
    for (int j = 0; j < p; ++j)
      if (st.code[j] >= 1) s.params.beta[j] = std::sqrt(sigma2 * var[i++]) * rng.normal();
    for (int j = 0; j < p; ++j)
      if (st.code[j] == 2) s.params.sqrt_theta[j] = std::sqrt(sigma2 * var[i++]) * rng.normal();
    s.ss = std::move(st);
  }
  if (auto* nb = std::get_if<NormalBetaPrior>(&pc.beta)) {
    if (!pc.is_spike_slab())
      for (int j = 0; j < p; ++j)
        s.params.beta[j] = std::sqrt(nb->tau * (nb->scale_by_sigma2 ? sigma2 : 1.0)) * rng.normal();
  } else {
    HierarchyDraw d = sample_shrinkage_hierarchy(rng, std::get<TripleGammaPrior>(pc.beta), p);
    s.params.beta = d.x;
    s.beta_scales = d.scales;
  }
  if (spec.opt.static_theta) s.params.sqrt_theta.setZero();
  s.path.resize(p, T + 1);
  for (int j = 0; j < p; ++j) {
    s.path(j, 0) = rng.normal();
    for (int t = 1; t <= T; ++t) s.path(j, t) = s.path(j, t - 1) + rng.normal();
  }
  if (spec.opt.static_theta) s.path.setZero();
  return s;
}

VectorXd simulate_y(Rng& rng, const SamplerState& s, const MatrixXd& X) {
  const int T = static_cast<int>(X.rows()), p = static_cast<int>(X.cols());
  VectorXd y(T);
  for (int t = 0; t < T; ++t) {
    double m = 0;
    for (int j = 0; j < p; ++j) m += X(t, j) * (s.params.beta[j] + s.params.sqrt_theta[j] * s.path(j, t + 1));
    y[t] = m + std::sqrt(s.params.sigma2_at(t)) * rng.normal();
  }
  return y;
}

// ---------------------------------------------------------------- draws store

int DrawsStore::index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

const std::vector<double>& DrawsStore::column(const std::string& name) const {
  const int i = index(name);
  if (i < 0) throw UserError("draws", "no column '" + name + "'");
  return columns[i];
}

int DrawsStore::p() const {
  int p = 0;
  while (has("beta[" + std::to_string(p + 1) + "]")) ++p;
  return p;
}

TVPParams DrawsStore::params(int m) const {
  const int p = this->p();
  TVPParams pr;
  pr.beta.resize(p);
  pr.sqrt_theta.resize(p);
  for (int j = 0; j < p; ++j) {
    pr.beta[j] = column("beta[" + std::to_string(j + 1) + "]")[m];
    pr.sqrt_theta[j] = column("sqrt_theta[" + std::to_string(j + 1) + "]")[m];
  }
  if (!h_paths.empty()) {
    const VectorXd& h = h_paths[m];
    pr.sigma2 = h.tail(h.size() - 1).array().exp();
  } else {
    pr.sigma2 = VectorXd::Constant(1, column("sigma2")[m]);
  }
  return pr;
}

namespace {

void flatten(const SamplerState& s, const ModelSpec& spec, std::vector<std::string>* names,
             std::vector<double>& vals) {
  vals.clear();
  auto put = [&](const std::string& n, double v) {
    if (names) names->push_back(n);
    vals.push_back(v);
  };
  auto idx = [](const char* base, int j) { return std::string(base) + "[" + std::to_string(j + 1) + "]"; };
  const int p = s.params.p();
  for (int j = 0; j < p; ++j) put(idx("beta", j), s.params.beta[j]);
  for (int j = 0; j < p; ++j) put(idx("sqrt_theta", j), s.params.sqrt_theta[j]);
  for (int j = 0; j < p; ++j) put(idx("theta", j), s.params.sqrt_theta[j] * s.params.sqrt_theta[j]);
  if (s.sv) {
    put("sv_mu", s.sv->mu);
    put("sv_phi", s.sv->phi);
    put("sv_sigma2_eta", s.sv->sigma2_eta);
    put("sv_h_T", s.sv->h[s.sv->T()]);
  } else {
    put("sigma2", s.params.sigma2[0]);
    if (spec.prior.sigma.hierarchical_C0) put("C0", s.C0);
  }
  auto branch = [&](const ScaleState& sc, const char* psi, const char* k2, const char* a, const char* c,
                    const char* b2, const char* phi) {
    for (int j = 0; j < p; ++j) put(idx(psi, j), sc.psi[j]);
    if (sc.finite_c)
      for (int j = 0; j < p; ++j) put(idx(k2, j), sc.kappa2[j]);
    put(a, sc.a);
    if (sc.finite_c) put(c, sc.c);
    put(b2, sc.B2);
    if (sc.finite_c) put(phi, sc.phi());
  };
  if (s.theta_scales) branch(*s.theta_scales, "psi_theta", "kappa2_theta", "a_xi", "c_xi", "kappa_B2", "phi_xi");
  if (s.beta_scales) branch(*s.beta_scales, "psi_beta", "kappa2_beta", "a_tau", "c_tau", "lambda_B2", "phi_tau");
  if (s.ss) {
    for (int j = 0; j < p; ++j) put(idx("code", j), s.ss->code[j]);
    put("pi_delta", s.ss->pi_delta);
    put("pi_gamma", s.ss->pi_gamma);
    if (std::get<SpikeSlabPrior>(spec.prior.theta).slab == SlabKind::StudentT) {
      for (int j = 0; j < p; ++j) put(idx("tau2", j), s.ss->tau2[j]);
      for (int j = 0; j < p; ++j) put(idx("xi2", j), s.ss->xi2[j]);
      put("lambda2", s.ss->lambda2);
      put("kappa2", s.ss->kappa2);
    }
  }
}

json mh_json(const MHStat& m) {
  return {{"proposed", m.proposed}, {"accepted", m.accepted}, {"rate", m.rate()}, {"log_step", m.log_step}};
}

}  // namespace

void reset_diagnostics(SamplerState& s) {
  for (BranchMH* b : {&s.theta_mh, &s.beta_mh})
    for (MHStat* m : {&b->a, &b->c, &b->phi}) m->proposed = m->accepted = 0;
  if (s.ss) {
    s.ss->proposed = {};
    s.ss->accepted = {};
  }
  if (s.sv) s.sv->phi_accepted = s.sv->phi_proposed = 0;
  s.theta_clamped = 0;
}

json chain_diagnostics(const SamplerState& s, const ModelSpec& spec) {
  json d = json::object();
  d["theta_clamped"] = s.theta_clamped;
  if (auto* tg = theta_tg(spec)) {
    if (tg->learn_a) d["mh_a_xi"] = mh_json(s.theta_mh.a);
    if (tg->learn_c) d["mh_c_xi"] = mh_json(s.theta_mh.c);
    if (tg->learn_phi) d["mh_phi_xi"] = mh_json(s.theta_mh.phi);
  }
  if (auto* tg = beta_tg(spec)) {
    if (tg->learn_a) d["mh_a_tau"] = mh_json(s.beta_mh.a);
    if (tg->learn_c) d["mh_c_tau"] = mh_json(s.beta_mh.c);
    if (tg->learn_phi) d["mh_phi_tau"] = mh_json(s.beta_mh.phi);
  }
  if (s.sv)
    d["sv_phi_acceptance"] = s.sv->phi_proposed ? double(s.sv->phi_accepted) / s.sv->phi_proposed : 0.0;
  if (s.ss) {
    static const char* nm[3] = {"zero", "fixed", "dynamic"};
    json mv = json::object();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b && s.ss->proposed[a][b] > 0)
          mv[std::string(nm[a]) + "->" + nm[b]] = {
              {"proposed", s.ss->proposed[a][b]},
              {"accepted", s.ss->accepted[a][b]},
              {"rate", double(s.ss->accepted[a][b]) / s.ss->proposed[a][b]}};
    d["single_move"] = mv;
  }
  return d;
}

void record_draw(DrawsStore& ds, const SamplerState& s, const ModelSpec& spec) {
  std::vector<double> vals;
  if (ds.names.empty()) {
    flatten(s, spec, &ds.names, vals);
    ds.columns.assign(ds.names.size(), {});
  } else {
    flatten(s, spec, nullptr, vals);
  }
  if (vals.size() != ds.columns.size()) throw Error("internal", "draw layout changed within a chain");
  for (size_t i = 0; i < vals.size(); ++i) ds.columns[i].push_back(vals[i]);
  if (spec.opt.store_paths) ds.paths.push_back(to_centered(s.path, s.params));
  if (s.sv) ds.h_paths.push_back(s.sv->h);
  if (s.ss) ds.codes.push_back(s.ss->code);
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UserError("io", "cannot write " + path);
  f << text;
}

}  // namespace

DrawsStore run_chain(const TimeSeriesData& data, const ModelSpec& spec, const ChainControl& ctl,
                     const SamplerState* start) {
  data.validate();
  if (ctl.n_burn < 0 || ctl.n_draws < 1 || ctl.thin < 1)
    throw UserError("chain", "need n_burn >= 0, n_draws >= 1, thin >= 1");
  Rng rng(ctl.seed);
  SamplerState s = start ? *start : initial_state(data, spec);
  DrawsStore ds;
  ds.seed = ctl.seed;
  ds.thin = ctl.thin;
  ds.n_burn = ctl.n_burn;
  ds.labels = data.labels;
  try {
    for (int it = 0; it < ctl.n_burn; ++it) gibbs_sweep(rng, s, data, spec, true);
    reset_diagnostics(s);
    for (int d = 0; d < ctl.n_draws; ++d) {
      for (int k = 0; k < ctl.thin; ++k) gibbs_sweep(rng, s, data, spec, false);
      record_draw(ds, s, spec);
    }
  } catch (...) {
    if (!ctl.checkpoint_path.empty()) write_text(ctl.checkpoint_path, state_to_json(s, rng).dump(1));
    throw;
  }
  if (!ctl.checkpoint_path.empty()) write_text(ctl.checkpoint_path, state_to_json(s, rng).dump(1));
  ds.diagnostics = chain_diagnostics(s, spec);
  return ds;
}

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  const int w = std::min(threads, n);
  for (int k = 0; k < w; ++k)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)  // lowest index wins: independent of scheduling
    if (e) std::rethrow_exception(e);
}

std::vector<DrawsStore> run_chains(const TimeSeriesData& data, const ModelSpec& spec, const ChainControl& ctl,
                                   int n_chains, int threads) {
  std::vector<DrawsStore> out(n_chains);
  parallel_for(n_chains, threads, [&](int c) {
    ChainControl cc = ctl;
    cc.seed = split_seed(ctl.seed, static_cast<std::uint64_t>(c));
    if (!ctl.checkpoint_path.empty()) cc.checkpoint_path = ctl.checkpoint_path + "." + std::to_string(c);
    out[c] = run_chain(data, spec, cc);
  });
  return out;
}

// ---------------------------------------------------------------- checkpoints

namespace {

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
json mat_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}
MatrixXd json_mat(const json& j) {
  const int r = static_cast<int>(j.size());
  const int c = r ? static_cast<int>(j[0].size()) : 0;
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) m.row(i) = json_vec(j[i]).transpose();
  return m;
}
json scale_json(const ScaleState& s) {
  return {{"psi", vec_json(s.psi)}, {"kappa2", vec_json(s.kappa2)}, {"a", s.a}, {"c", s.c},
          {"finite_c", s.finite_c}, {"B2", s.B2}};
}
ScaleState json_scale(const json& j) {
  ScaleState s;
  s.psi = json_vec(j["psi"]);
  s.kappa2 = json_vec(j["kappa2"]);
  s.a = j["a"];
  s.c = j["c"];
  s.finite_c = j["finite_c"];
  s.B2 = j["B2"];
  return s;
}
json mhs_json(const BranchMH& b) {
  json j = json::array();
  for (const MHStat* m : {&b.a, &b.c, &b.phi}) j.push_back({m->log_step, m->proposed, m->accepted, m->adapt_n});
  return j;
}
BranchMH json_mhs(const json& j) {
  BranchMH b;
  MHStat* ms[3] = {&b.a, &b.c, &b.phi};
  for (int i = 0; i < 3; ++i) {
    ms[i]->log_step = j[i][0];
    ms[i]->proposed = j[i][1];
    ms[i]->accepted = j[i][2];
    ms[i]->adapt_n = j[i][3];
  }
  return b;
}

}  // namespace

json state_to_json(const SamplerState& s, const Rng& rng) {
  json j;
  j["format"] = "tvpshrink-checkpoint-1";
  // documented field order: path, beta, sqrt_theta, sigma2, scales, mh, C0, sv, ss, counters, rng
  j["path"] = mat_json(s.path);
  j["beta"] = vec_json(s.params.beta);
  j["sqrt_theta"] = vec_json(s.params.sqrt_theta);
  j["sigma2"] = vec_json(s.params.sigma2);
  if (s.theta_scales) j["theta_scales"] = scale_json(*s.theta_scales);
  if (s.beta_scales) j["beta_scales"] = scale_json(*s.beta_scales);
  j["theta_mh"] = mhs_json(s.theta_mh);
  j["beta_mh"] = mhs_json(s.beta_mh);
  j["C0"] = s.C0;
  if (s.sv)
    j["sv"] = {{"h", vec_json(s.sv->h)}, {"mu", s.sv->mu}, {"phi", s.sv->phi},
               {"sigma2_eta", s.sv->sigma2_eta}, {"r", s.sv->r},
               {"phi_accepted", s.sv->phi_accepted}, {"phi_proposed", s.sv->phi_proposed}};
  if (s.ss) {
    j["ss"] = {{"code", s.ss->code}, {"pi_delta", s.ss->pi_delta}, {"pi_gamma", s.ss->pi_gamma},
               {"tau2", vec_json(s.ss->tau2)}, {"xi2", vec_json(s.ss->xi2)},
               {"lambda2", s.ss->lambda2}, {"kappa2", s.ss->kappa2},
               {"proposed", s.ss->proposed}, {"accepted", s.ss->accepted}};
  }
  j["theta_clamped"] = s.theta_clamped;
  j["iteration"] = s.iteration;
  j["rng"] = const_cast<Rng&>(rng).state();
  return j;
}

SamplerState state_from_json(const json& j, Rng* rng) {
  if (j.value("format", std::string()) != "tvpshrink-checkpoint-1")
    throw UserError("checkpoint", "unrecognized checkpoint format");
  SamplerState s;
  s.path = json_mat(j["path"]);
  s.params.beta = json_vec(j["beta"]);
  s.params.sqrt_theta = json_vec(j["sqrt_theta"]);
  s.params.sigma2 = json_vec(j["sigma2"]);
  if (j.contains("theta_scales")) s.theta_scales = json_scale(j["theta_scales"]);
  if (j.contains("beta_scales")) s.beta_scales = json_scale(j["beta_scales"]);
  s.theta_mh = json_mhs(j["theta_mh"]);
  s.beta_mh = json_mhs(j["beta_mh"]);
  s.C0 = j["C0"];
  if (j.contains("sv")) {
    SVState v;
    const json& q = j["sv"];
    v.h = json_vec(q["h"]);
    v.mu = q["mu"];
    v.phi = q["phi"];
    v.sigma2_eta = q["sigma2_eta"];
    v.r = q["r"].get<std::vector<int>>();
    v.phi_accepted = q["phi_accepted"];
    v.phi_proposed = q["phi_proposed"];
    s.sv = std::move(v);
  }
  if (j.contains("ss")) {
    SpikeSlabState st;
    const json& q = j["ss"];
    st.code = q["code"].get<std::vector<int>>();
    st.pi_delta = q["pi_delta"];
    st.pi_gamma = q["pi_gamma"];
    st.tau2 = json_vec(q["tau2"]);
    st.xi2 = json_vec(q["xi2"]);
    st.lambda2 = q["lambda2"];
    st.kappa2 = q["kappa2"];
    st.proposed = q["proposed"].get<std::array<std::array<long, 3>, 3>>();
    st.accepted = q["accepted"].get<std::array<std::array<long, 3>, 3>>();
    s.ss = std::move(st);
  }
  s.theta_clamped = j["theta_clamped"];
  s.iteration = j["iteration"];
  if (rng) rng->set_state(j["rng"].get<std::string>());
  return s;
}

}  // namespace tvp
