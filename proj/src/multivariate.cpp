#include "tvp/multivariate.hpp"

#include <cmath>

namespace tvp {

using nlohmann::json;

void MultiTimeSeries::validate(int lag) const {
  if (q() < 2) throw UserError("data", "a multivariate system needs q >= 2 series");
  if (T() <= lag + 1) throw UserError("data", "need T > lag + 1 observations");
  if (!Y.allFinite()) throw UserError("data", "non-finite entry in the response matrix");
  if (!names.empty() && static_cast<int>(names.size()) != q())
    throw UserError("data", "variable-name count does not match the number of series");
}

namespace {

std::string name_of(const MultiTimeSeries& d, int i) {
  return d.names.empty() ? "y" + std::to_string(i + 1) : d.names[i];
}

const ModelSpec& spec_for(const std::vector<ModelSpec>& specs, int i) {
  if (specs.empty()) throw UserError("config", "no equation specification given");
  if (specs.size() == 1) return specs[0];
  if (static_cast<int>(specs.size()) <= i) throw UserError("config", "fewer equation specifications than rows");
  return specs[i];
}

ModelSpec with_paths(ModelSpec s) {
  s.opt.store_paths = true;
  return s;
}

}  // namespace

DrawsStore run_pure_sigma(const VectorXd& y, const SigmaPrior& sp, const ChainControl& ctl) {
  const int T = static_cast<int>(y.size());
  if (T < 2 || !y.allFinite()) throw UserError("data", "need at least two finite observations");
  Rng rng(ctl.seed);
  DrawsStore ds;
  ds.seed = ctl.seed;
  ds.thin = ctl.thin;
  ds.n_burn = ctl.n_burn;
  const double v = std::max(y.squaredNorm() / T, 1e-6);
  if (sp.sv) {
    SVState s = initial_sv_state(T, std::log(v));
    ds.names = {"sv_mu", "sv_phi", "sv_sigma2_eta", "sv_h_T"};
    ds.columns.assign(4, {});
    for (int it = 0; it < ctl.n_burn; ++it) sv_sweep(rng, s, y, sp.svp);
    s.phi_accepted = s.phi_proposed = 0;
    for (int d = 0; d < ctl.n_draws; ++d) {
      for (int k = 0; k < ctl.thin; ++k) sv_sweep(rng, s, y, sp.svp);
      const double vals[4] = {s.mu, s.phi, s.sigma2_eta, s.h[T]};
      for (int i = 0; i < 4; ++i) ds.columns[i].push_back(vals[i]);
      ds.h_paths.push_back(s.h);
    }
    ds.diagnostics = {{"sv_phi_acceptance", s.phi_proposed ? double(s.phi_accepted) / s.phi_proposed : 0.0}};
  } else {
    double C0 = sp.C0, sigma2 = v;
    ds.names = {"sigma2"};
    if (sp.hierarchical_C0) ds.names.push_back("C0");
    ds.columns.assign(ds.names.size(), {});
    auto sweep = [&] {
      sigma2 = std::max((C0 + 0.5 * y.squaredNorm()) / rng.gamma(sp.c0 + 0.5 * T, 1.0), kSigma2Floor);
      if (sp.hierarchical_C0) C0 = rng.gamma(sp.g0 + sp.c0, sp.g1 + 1.0 / sigma2);
    };
    for (int it = 0; it < ctl.n_burn; ++it) sweep();
    for (int d = 0; d < ctl.n_draws; ++d) {
      for (int k = 0; k < ctl.thin; ++k) sweep();
      ds.columns[0].push_back(sigma2);
      if (sp.hierarchical_C0) ds.columns[1].push_back(C0);
    }
    ds.diagnostics = json::object();
  }
  return ds;
}

TimeSeriesData cholesky_equation_data(const MultiTimeSeries& d, int i) {
  if (i < 1 || i >= d.q()) throw UserError("data", "Cholesky equation index out of range");
  TimeSeriesData e;
  e.y = d.Y.col(i);
  e.X = d.Y.leftCols(i);
  for (int k = 0; k < i; ++k) e.labels.push_back(name_of(d, k));
  return e;
}

SystemFit fit_cholesky_sv(const MultiTimeSeries& d, const std::vector<ModelSpec>& specs, const ChainControl& ctl,
                          int threads) {
  d.validate();
  SystemFit fit;
  fit.kind = "cholesky_sv";
  for (int i = 0; i < d.q(); ++i) fit.order.push_back(name_of(d, i));
  fit.eq.resize(d.q());
  parallel_for(d.q(), threads, [&](int i) {
    ChainControl c = ctl;
    c.seed = split_seed(ctl.seed, static_cast<std::uint64_t>(i));
    if (!ctl.checkpoint_path.empty()) c.checkpoint_path = ctl.checkpoint_path + ".eq" + std::to_string(i + 1);
    const ModelSpec spec = with_paths(spec_for(specs, i));
    if (i == 0) {
      fit.eq[0] = run_pure_sigma(d.Y.col(0), spec.prior.sigma, c);
    } else {
      fit.eq[i] = run_chain(cholesky_equation_data(d, i), spec, c);
    }
  });
  return fit;
}

MatrixXd var_design(const MatrixXd& Y, int lag) {
  const int T = static_cast<int>(Y.rows()), q = static_cast<int>(Y.cols());
  if (lag < 1) throw UserError("config", "VAR lag order must be >= 1");
  MatrixXd X(T - lag, q * lag + 1);
  for (int t = lag; t < T; ++t) {
    X(t - lag, 0) = 1.0;
    for (int l = 1; l <= lag; ++l) X.block(t - lag, 1 + (l - 1) * q, 1, q) = Y.row(t - l);
  }
  return X;
}

SystemFit fit_tvp_var(const MultiTimeSeries& d, int lag, const std::vector<ModelSpec>& specs,
                      const ChainControl& ctl) {
  d.validate(lag);
  const int q = d.q(), Te = d.T() - lag;
  const MatrixXd X = var_design(d.Y, lag);
  const int p = static_cast<int>(X.cols());
  SystemFit fit;
  fit.kind = "tvp_var";
  fit.lag = lag;
  for (int i = 0; i < q; ++i) fit.order.push_back(name_of(d, i));

  std::vector<std::string> base_labels = {"const"};
  for (int l = 1; l <= lag; ++l)
    for (int k = 0; k < q; ++k) base_labels.push_back(name_of(d, k) + ".l" + std::to_string(l));

  std::vector<TimeSeriesData> data(q);
  std::vector<ModelSpec> spec(q);
  std::vector<SamplerState> st(q);
  std::vector<Rng> rng;
  std::vector<VectorXd> eta(q);
  for (int i = 0; i < q; ++i) {
    data[i].y = d.Y.col(i).tail(Te);
    data[i].X.resize(Te, p + i);
    data[i].X.leftCols(p) = X;
    data[i].labels = base_labels;
    for (int k = 0; k < i; ++k) {
      data[i].X.col(p + k) = eta[k];
      data[i].labels.push_back("eta:" + name_of(d, k));
    }
    spec[i] = with_paths(spec_for(specs, i));
    st[i] = initial_state(data[i], spec[i]);
    rng.emplace_back(split_seed(ctl.seed, static_cast<std::uint64_t>(i)));
    // start the residual feed from least squares on the shared regressors
    const VectorXd coef = X.colPivHouseholderQr().solve(data[i].y);
    eta[i] = data[i].y - X * coef;
  }
  fit.eq.resize(q);
  for (int i = 0; i < q; ++i) {
    fit.eq[i].seed = split_seed(ctl.seed, static_cast<std::uint64_t>(i));
    fit.eq[i].thin = ctl.thin;
    fit.eq[i].n_burn = ctl.n_burn;
    fit.eq[i].labels = data[i].labels;
  }
  // one joint sweep: equations in order 1..q, each conditioning on the latest residuals
  auto sweep = [&](bool adapt) {
    for (int i = 0; i < q; ++i) {
      for (int k = 0; k < i; ++k) data[i].X.col(p + k) = eta[k];
      gibbs_sweep(rng[i], st[i], data[i], spec[i], adapt);
      eta[i] = residuals(st[i], data[i]);
      if (!eta[i].allFinite()) throw NumericalError("tvp_var: non-finite residual feed in equation " +
                                                    std::to_string(i + 1));
    }
  };
  for (int it = 0; it < ctl.n_burn; ++it) sweep(true);
  for (auto& s : st) reset_diagnostics(s);
  for (int m = 0; m < ctl.n_draws; ++m) {
    for (int k = 0; k < ctl.thin; ++k) sweep(false);
    for (int i = 0; i < q; ++i) record_draw(fit.eq[i], st[i], spec[i]);
  }
  for (int i = 0; i < q; ++i) fit.eq[i].diagnostics = chain_diagnostics(st[i], spec[i]);
  return fit;
}

MatrixXd unit_lower_inverse(const MatrixXd& B) {
  const int q = static_cast<int>(B.rows());
  // (I - B) A = I, solved column by column with forward substitution
  MatrixXd A = MatrixXd::Zero(q, q);
  for (int c = 0; c < q; ++c) {
    A(c, c) = 1.0;
    for (int i = c + 1; i < q; ++i) {
      double s = 0;
      for (int k = c; k < i; ++k) s += B(i, k) * A(k, c);
      A(i, c) = s;
    }
  }
  return A;
}

MatrixXd sigma_from_factors(const MatrixXd& A, const VectorXd& dvec) {
  MatrixXd S = A * dvec.asDiagonal() * A.transpose();
  return 0.5 * (S + S.transpose());
}

std::vector<MatrixXd> sigma_t_draws(const SystemFit& fit, int t) {
  const int q = static_cast<int>(fit.eq.size());
  const int M = fit.eq[0].n_draws();
  std::vector<MatrixXd> out;
  out.reserve(M);
  auto var_at = [&](const DrawsStore& ds, int m) {
    if (!ds.h_paths.empty()) return std::exp(ds.h_paths[m][t]);
    return ds.column("sigma2")[m];
  };
  for (int m = 0; m < M; ++m) {
    MatrixXd L = MatrixXd::Zero(q, q);
    VectorXd dv(q);
    for (int i = 0; i < q; ++i) {
      const DrawsStore& ds = fit.eq[i];
      dv[i] = var_at(ds, m);
      if (fit.kind == "cholesky_sv") {
        if (i > 0) {
          if (ds.paths.empty()) throw UserError("multivariate", "Sigma_t needs stored coefficient paths");
          for (int k = 0; k < i; ++k) L(i, k) = ds.paths[m](k, t);
        }
      } else {
        if (ds.paths.empty()) throw UserError("multivariate", "Sigma_t needs stored coefficient paths");
        const int p = static_cast<int>(ds.paths[m].rows()) - i;
        for (int k = 0; k < i; ++k) L(i, k) = ds.paths[m](p + k, t);
      }
    }
    const MatrixXd A = fit.kind == "cholesky_sv" ? unit_lower_inverse(L) : MatrixXd(L + MatrixXd::Identity(q, q));
    out.push_back(sigma_from_factors(A, dv));
  }
  return out;
}

}  // namespace tvp
