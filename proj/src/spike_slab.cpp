#include "tvp/spike_slab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tvp/special.hpp"

namespace tvp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double inv_gamma_draw(Rng& rng, double shape, double scale) { return scale / rng.gamma(shape, 1.0); }

MatrixXd sub_matrix(const MatrixXd& G, const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  MatrixXd S(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) S(a, b) = G(idx[a], idx[b]);
  return S;
}

VectorXd sub_vector(const VectorXd& v, const std::vector<int>& idx) {
  VectorXd s(idx.size());
  for (size_t a = 0; a < idx.size(); ++a) s[a] = v[idx[a]];
  return s;
}

// y'y - b'Q^{-1}b for the active columns, given alpha = Q^{-1}b and the extra penalty
// alpha' D^{-1} alpha (zero for the fractional slab).
double residual_ss(const RegressionMoments& mom, const std::vector<int>& idx, const VectorXd& alpha,
                   const VectorXd* slab_var, double fallback) {
  if (mom.Z.size() == 0) return std::max(fallback, 0.0);
  VectorXd r = mom.y;
  for (size_t a = 0; a < idx.size(); ++a) r -= alpha[a] * mom.Z.col(idx[a]);
  double pen = 0;
  if (slab_var)
    for (size_t a = 0; a < idx.size(); ++a) pen += alpha[a] * alpha[a] / (*slab_var)[a];
  return r.squaredNorm() + pen;
}

// Cholesky of a cross-product that must be numerically full rank.
bool full_rank_llt(const MatrixXd& G, Eigen::LLT<MatrixXd>& llt) {
  if (G.rows() == 0) return true;
  llt.compute(G);
  if (llt.info() != Eigen::Success) return false;
  const VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
  const double scale = std::sqrt(G.diagonal().maxCoeff());
  return d.minCoeff() > 1e-10 * std::max(scale, 1e-300);
}

int category_draw(Rng& rng, const std::vector<double>& logw) {
  const double mx = *std::max_element(logw.begin(), logw.end());
  double tot = 0;
  std::vector<double> w(logw.size());
  for (size_t i = 0; i < w.size(); ++i) tot += (w[i] = std::exp(logw[i] - mx));
  double u = rng.uniform() * tot;
  for (size_t i = 0; i < w.size(); ++i)
    if ((u -= w[i]) <= 0) return static_cast<int>(i);
  return static_cast<int>(w.size()) - 1;
}

}  // namespace

ModelCounts counts(const std::vector<int>& code) {
  ModelCounts c;
  for (int v : code) (v == 2 ? c.p_d : v == 1 ? c.p_f : c.p_0)++;
  return c;
}

RegressionMoments regression_moments(const StatePath& path, const TimeSeriesData& data) {
  const int T = data.T(), p = data.p();
  MatrixXd Z(T, 2 * p);
  Z.leftCols(p) = data.X;
  for (int j = 0; j < p; ++j)
    Z.col(p + j) = data.X.col(j).cwiseProduct(path.row(j).segment(1, T).transpose());
  RegressionMoments m;
  m.G = Z.transpose() * Z;
  m.b = Z.transpose() * data.y;
  m.yy = data.y.squaredNorm();
  m.T = T;
  m.p = p;
  m.Z = std::move(Z);
  m.y = data.y;
  return m;
}

std::vector<int> active_columns(const std::vector<int>& code) {
  const int p = static_cast<int>(code.size());
  std::vector<int> idx;
  for (int j = 0; j < p; ++j)
    if (code[j] >= 1) idx.push_back(j);
  for (int j = 0; j < p; ++j)
    if (code[j] == 2) idx.push_back(p + j);
  return idx;
}

VectorXd slab_variances(const std::vector<int>& code, const SpikeSlabPrior& ss, const SpikeSlabState* st) {
  const int p = static_cast<int>(code.size());
  const std::vector<int> idx = active_columns(code);
  VectorXd v(idx.size());
  for (size_t a = 0; a < idx.size(); ++a) {
    const bool is_beta = idx[a] < p;
    const int j = is_beta ? idx[a] : idx[a] - p;
    switch (ss.slab) {
      case SlabKind::Gaussian: v[a] = ss.tau * (is_beta ? ss.B_delta : ss.B_gamma); break;
      case SlabKind::StudentT:
        if (!st) throw UserError("spike_slab", "Student-t slab variances need the current scales");
        v[a] = is_beta ? st->lambda2 / st->tau2[j] : st->kappa2 / st->xi2[j];
        break;
      case SlabKind::Fractional: v[a] = 1.0; break;  // no explicit slab variance
    }
  }
  return v;
}

double log_marginal_likelihood(const std::vector<int>& code, const RegressionMoments& mom,
                               const SpikeSlabPrior& ss, const SpikeSlabState* st, double c0, double C0) {
  const std::vector<int> idx = active_columns(code);
  const int k = static_cast<int>(idx.size());
  const double T = mom.T;
  const MatrixXd G = sub_matrix(mom.G, idx);
  const VectorXd b = sub_vector(mom.b, idx);
  if (ss.slab == SlabKind::Fractional) {
    Eigen::LLT<MatrixXd> llt;
    if (!full_rank_llt(G, llt)) return -INFINITY;
    const VectorXd ah = k ? VectorXd(llt.solve(b)) : VectorXd();
    const double ssr = residual_ss(mom, idx, ah, nullptr, mom.yy - (k ? b.dot(ah) : 0.0));
    const double f = ss.b;
    const double cN = c0 + 0.5 * (1 - f) * T, CN = C0 + 0.5 * (1 - f) * ssr;
    return 0.5 * k * std::log(f) - 0.5 * T * (1 - f) * kLog2Pi + std::lgamma(cN) - std::lgamma(c0) +
           c0 * std::log(C0) - cN * std::log(CN);
  }
  double logdet = 0, rss = mom.yy;
  if (k > 0) {
    const VectorXd v = slab_variances(code, ss, st);
    const VectorXd sd = v.cwiseSqrt();
    MatrixXd M = sd.asDiagonal() * G * sd.asDiagonal();
    M.diagonal().array() += 1.0;
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) return -INFINITY;
    logdet = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const VectorXd u = sd.cwiseProduct(b);
    const VectorXd w = llt.solve(u);
    const VectorXd ah = sd.cwiseProduct(w);  // posterior mean of the active coefficients
    rss = residual_ss(mom, idx, ah, &v, mom.yy - u.dot(w));
  }
  const double cN = c0 + 0.5 * T, CN = C0 + 0.5 * std::max(rss, 0.0);
  return -0.5 * T * kLog2Pi - 0.5 * logdet + c0 * std::log(C0) - cN * std::log(CN) + std::lgamma(cN) -
         std::lgamma(c0);
}

double log_indicator_prior(const std::vector<int>& code, const SpikeSlabPrior& ss, const SpikeSlabState& st) {
  return ss.pi_hierarchical ? log_indicator_prior_integrated(code, ss)
                            : log_indicator_prior_fixed(code, st.pi_delta, st.pi_gamma);
}

int model_index(const std::vector<int>& code) {
  int idx = 0;
  for (int j = static_cast<int>(code.size()) - 1; j >= 0; --j) idx = 3 * idx + code[j];
  return idx;
}

namespace {

std::vector<int> code_of(int idx, int p) {
  std::vector<int> c(p);
  for (int j = 0; j < p; ++j) {
    c[j] = idx % 3;
    idx /= 3;
  }
  return c;
}

double log_score(const std::vector<int>& code, const RegressionMoments* mom, const SpikeSlabPrior& ss,
                 const SpikeSlabState& st, double c0, double C0) {
  const double lp = log_indicator_prior(code, ss, st);
  if (!mom) return lp;  // prior only
  return lp + log_marginal_likelihood(code, *mom, ss, &st, c0, C0);
}

// Random-walk MH on the log of each active slab scale with alpha and sigma2 integrated out.
// Followed by fresh draws of alpha and sigma2, this is a valid partially collapsed kernel and
// breaks the scale/coefficient coupling that makes the plain Gibbs updates sticky in heavy tails.
void collapsed_scale_moves(Rng& rng, SpikeSlabState& st, const RegressionMoments& mom, const SpikeSlabPrior& ss,
                           double c0, double C0) {
  const int p = static_cast<int>(st.code.size());
  constexpr double kStep = 1.5;
  double cur = log_marginal_likelihood(st.code, mom, ss, &st, c0, C0);
  auto move = [&](double& x, double a) {
    const double old = x;
    const double prop = old * std::exp(kStep * rng.normal());
    x = prop;
    const double lml = log_marginal_likelihood(st.code, mom, ss, &st, c0, C0);
    // Gamma(a, a) prior on x, log-scale proposal: Jacobian contributes x
    const double lr = lml - cur + a * (std::log(prop) - std::log(old)) - a * (prop - old);
    if (std::isfinite(lml) && std::log(rng.uniform()) < lr)
      cur = lml;
    else
      x = old;
  };
  bool any_beta = false, any_theta = false;
  for (int j = 0; j < p; ++j) {
    if (st.code[j] >= 1) {
      move(st.tau2[j], ss.a_tau);
      any_beta = true;
    }
    if (st.code[j] == 2) {
      move(st.xi2[j], ss.a_xi);
      any_theta = true;
    }
  }
  if (any_beta) move(st.lambda2, ss.a_lambda);
  if (any_theta) move(st.kappa2, ss.a_kappa);
}

Enumeration enumerate_impl(const RegressionMoments* mom, int p, const SpikeSlabPrior& ss,
                           const SpikeSlabState& st, double c0, double C0) {
  if (p > ss.enumeration_cap)
    throw UserError("spike_slab", "p = " + std::to_string(p) + " exceeds the enumeration cap " +
                                      std::to_string(ss.enumeration_cap) + "; use step = \"single_move\"");
  int n = 1;
  for (int j = 0; j < p; ++j) n *= 3;
  Enumeration e;
  e.codes.resize(n);
  e.prob.resize(n);
  double mx = -INFINITY;
  for (int i = 0; i < n; ++i) {
    e.codes[i] = code_of(i, p);
    e.prob[i] = log_score(e.codes[i], mom, ss, st, c0, C0);
    mx = std::max(mx, e.prob[i]);
  }
  if (!std::isfinite(mx)) throw NumericalError("spike_slab: every model has zero posterior mass");
  double tot = 0;
  for (double& v : e.prob) tot += (v = std::exp(v - mx));
  for (double& v : e.prob) v /= tot;
  return e;
}

void enumeration_step(Rng& rng, SpikeSlabState& st, const RegressionMoments* mom, int p,
                      const SpikeSlabPrior& ss, double c0, double C0) {
  const Enumeration e = enumerate_impl(mom, p, ss, st, c0, C0);
  double u = rng.uniform();
  int i = 0;
  for (; i + 1 < static_cast<int>(e.prob.size()); ++i)
    if ((u -= e.prob[i]) <= 0) break;
  st.code = e.codes[i];
}

void single_move_impl(Rng& rng, SpikeSlabState& st, const RegressionMoments* mom, const SpikeSlabPrior& ss,
                      double c0, double C0) {
  const int p = static_cast<int>(st.code.size());
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  for (int i = p - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  double cur = log_score(st.code, mom, ss, st, c0, C0);
  for (int j : order) {
    const int from = st.code[j];
    // the two alternatives, each with probability 1/2: q is symmetric
    const int to = (from + 1 + (rng.uniform() < 0.5 ? 0 : 1)) % 3;
    st.code[j] = to;
    const double prop = log_score(st.code, mom, ss, st, c0, C0);
    ++st.proposed[from][to];
    if (std::log(rng.uniform()) < prop - cur) {
      cur = prop;
      ++st.accepted[from][to];
    } else {
      st.code[j] = from;
    }
  }
}

}  // namespace

Enumeration enumerate_models(const RegressionMoments& mom, const SpikeSlabPrior& ss, const SpikeSlabState& st,
                             double c0, double C0) {
  return enumerate_impl(&mom, mom.p, ss, st, c0, C0);
}

void full_enumeration_step(Rng& rng, SpikeSlabState& st, const RegressionMoments& mom, const SpikeSlabPrior& ss,
                           double c0, double C0) {
  enumeration_step(rng, st, &mom, mom.p, ss, c0, C0);
}

void single_move_step(Rng& rng, SpikeSlabState& st, const RegressionMoments& mom, const SpikeSlabPrior& ss,
                      double c0, double C0) {
  single_move_impl(rng, st, &mom, ss, c0, C0);
}

void spike_slab_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec) {
  const auto& ss = std::get<SpikeSlabPrior>(spec.prior.theta);
  if (s.sv) throw UserError("spike_slab", "the spike-and-slab sampler requires a homoscedastic error");
  if (!std::holds_alternative<NormalBetaPrior>(spec.prior.beta))
    throw UserError("spike_slab", "beta is governed by the spike-and-slab prior; use the default beta prior");
  SpikeSlabState& st = *s.ss;
  const SigmaPrior& sp = spec.prior.sigma;
  const int T = data.T(), p = data.p();
  const bool prior_only = spec.opt.prior_only;
  const bool stat = spec.opt.static_theta;

  // (a) indicators | z, y (alpha and sigma2 integrated out)
  RegressionMoments mom = regression_moments(s.path, data);
  const RegressionMoments* mp = prior_only ? nullptr : &mom;
  if (ss.slab == SlabKind::StudentT && mp) collapsed_scale_moves(rng, st, mom, ss, sp.c0, s.C0);
  if (stat) {
    // static regression: dynamic code unavailable, draw delta_j only
    for (int j = 0; j < p; ++j) {
      std::vector<double> lw(2);
      for (int c = 0; c < 2; ++c) {
        st.code[j] = c;
        lw[c] = log_score(st.code, mp, ss, st, sp.c0, s.C0);
      }
      st.code[j] = category_draw(rng, lw);
    }
  } else {
    const bool enumerate = ss.step == "enumerate" || (ss.step == "auto" && p <= ss.enumeration_cap);
    if (enumerate)
      enumeration_step(rng, st, mp, p, ss, sp.c0, s.C0);
    else
      single_move_impl(rng, st, mp, ss, sp.c0, s.C0);
  }

  // (b) sigma2 | indicators, z, y and active coefficients | sigma2
  const std::vector<int> idx = active_columns(st.code);
  const int k = static_cast<int>(idx.size());
  VectorXd alpha(k);
  double sigma2;
  if (prior_only) {
    if (ss.slab == SlabKind::Fractional)
      throw UserError("spike_slab", "the fractional slab has no prior-only mode");
    sigma2 = inv_gamma_draw(rng, sp.c0, s.C0);
    const VectorXd v = slab_variances(st.code, ss, &st);
    for (int a = 0; a < k; ++a) alpha[a] = std::sqrt(sigma2 * v[a]) * rng.normal();
  } else {
    const MatrixXd G = sub_matrix(mom.G, idx);
    const VectorXd b = sub_vector(mom.b, idx);
    // alpha | sigma2 ~ N(S m, sigma2 S P^{-1} S) with P = S G S (+ I for a proper slab), m = P^{-1} S b
    VectorXd sd = VectorXd::Ones(k), v;
    MatrixXd P = G;
    double shape, scale;
    if (ss.slab == SlabKind::Fractional) {
      Eigen::LLT<MatrixXd> llt;
      if (!full_rank_llt(G, llt)) throw NumericalError("spike_slab: sampled model has a singular design");
      const VectorXd ah = k ? VectorXd(llt.solve(b)) : VectorXd();
      const double ssr = residual_ss(mom, idx, ah, nullptr, mom.yy - (k ? b.dot(ah) : 0.0));
      shape = sp.c0 + 0.5 * (1 - ss.b) * T;
      scale = s.C0 + 0.5 * (1 - ss.b) * ssr;
    } else {
      double rss = mom.yy;
      if (k) {
        v = slab_variances(st.code, ss, &st);
        sd = v.cwiseSqrt();
        P = sd.asDiagonal() * G * sd.asDiagonal();
        P.diagonal().array() += 1.0;
        Eigen::LLT<MatrixXd> llt(P);
        const VectorXd u = sd.cwiseProduct(b);
        const VectorXd w = llt.solve(u);
        rss = residual_ss(mom, idx, sd.cwiseProduct(w), &v, mom.yy - u.dot(w));
      }
      shape = sp.c0 + 0.5 * T;
      scale = s.C0 + 0.5 * std::max(rss, 0.0);
    }
    sigma2 = inv_gamma_draw(rng, shape, scale);
    sigma2 = std::max(sigma2, kSigma2Floor);
    if (k) {
      Eigen::LLT<MatrixXd> llt(P);
      if (llt.info() != Eigen::Success) throw NumericalError("spike_slab: active precision not positive definite");
      const VectorXd z = std_normal_vector(rng, k);
      const VectorXd w = llt.solve(sd.cwiseProduct(b)) + std::sqrt(sigma2) * llt.matrixU().solve(z);
      alpha = sd.cwiseProduct(w);
    }
  }
  s.params.sigma2 = VectorXd::Constant(1, std::max(sigma2, kSigma2Floor));
  s.params.beta.setZero(p);
  s.params.sqrt_theta.setZero(p);
  for (int a = 0; a < k; ++a) {
    if (idx[a] < p)
      s.params.beta[idx[a]] = alpha[a];
    else
      s.params.sqrt_theta[idx[a] - p] = alpha[a];
  }

  // Student-t slab scales
  if (ss.slab == SlabKind::StudentT) {
    double sb = 0, stt = 0;
    int kb = 0, kt = 0;
    for (int j = 0; j < p; ++j) {
      const double bj = s.params.beta[j];
      if (st.code[j] >= 1) {
        st.tau2[j] = rng.gamma(ss.a_tau + 0.5, ss.a_tau + bj * bj / (2 * sigma2 * st.lambda2));
        sb += st.tau2[j] * bj * bj / sigma2;
        ++kb;
      } else {
        st.tau2[j] = rng.gamma(ss.a_tau, ss.a_tau);
      }
      const double tj = s.params.sqrt_theta[j];
      if (st.code[j] == 2) {
        st.xi2[j] = rng.gamma(ss.a_xi + 0.5, ss.a_xi + tj * tj / (2 * sigma2 * st.kappa2));
        stt += st.xi2[j] * tj * tj / sigma2;
        ++kt;
      } else {
        st.xi2[j] = rng.gamma(ss.a_xi, ss.a_xi);
      }
    }
    st.lambda2 = kb ? sample_gig(rng, {ss.a_lambda - 0.5 * kb, 2 * ss.a_lambda, std::max(sb, 1e-300)})
                    : rng.gamma(ss.a_lambda, ss.a_lambda);
    st.kappa2 = kt ? sample_gig(rng, {ss.a_kappa - 0.5 * kt, 2 * ss.a_kappa, std::max(stt, 1e-300)})
                   : rng.gamma(ss.a_kappa, ss.a_kappa);
  }

  // (c) path | parameters
  draw_path(rng, s, data, spec);

  // indicator probabilities
  if (ss.pi_hierarchical) {
    const ModelCounts c = counts(st.code);
    st.pi_delta = rng.beta(ss.a0_delta + c.p_f, ss.b0_delta + c.p_0);
    st.pi_gamma = rng.beta(ss.a0_gamma + c.p_d, ss.b0_gamma + p - c.p_d);
  }
  if (sp.hierarchical_C0) s.C0 = rng.gamma(sp.g0 + sp.c0, sp.g1 + 1.0 / s.params.sigma2[0]);
}

}  // namespace tvp
