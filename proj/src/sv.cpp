#include "tvp/sv.hpp"

#include <cmath>

#include "tvp/linalg.hpp"
#include "tvp/special.hpp"

namespace tvp {

const std::array<MixtureComponent, 10>& log_chi2_mixture() {
  static const std::array<MixtureComponent, 10> m = {{
      {0.00609, 1.92677, 0.11265},
      {0.04775, 1.34744, 0.17788},
      {0.13057, 0.73504, 0.26768},
      {0.20674, 0.02266, 0.40611},
      {0.22715, -0.85173, 0.62699},
      {0.18842, -1.97278, 0.98583},
      {0.12047, -3.46788, 1.57469},
      {0.05591, -5.55246, 2.54498},
      {0.01575, -8.68384, 4.16591},
      {0.00115, -14.65000, 7.33342},
  }};
  return m;
}

SVState initial_sv_state(int T, double log_var) {
  SVState s;
  s.h = VectorXd::Constant(T + 1, log_var);
  s.mu = log_var;
  s.r.assign(T, 4);
  return s;
}

namespace {

void draw_indicators(Rng& rng, SVState& s, const VectorXd& ystar) {
  const auto& mix = log_chi2_mixture();
  const int T = s.T();
  std::array<double, 10> w;
  for (int t = 0; t < T; ++t) {
    const double e = ystar[t] - s.h[t + 1];
    double mx = -1e300;
    for (int k = 0; k < 10; ++k) {
      const double d = e - mix[k].mean;
      w[k] = std::log(mix[k].prob) - 0.5 * std::log(mix[k].var) - 0.5 * d * d / mix[k].var;
      mx = std::max(mx, w[k]);
    }
    double tot = 0;
    for (double& x : w) tot += (x = std::exp(x - mx));
    double u = rng.uniform() * tot;
    int k = 0;
    while (k < 9 && (u -= w[k]) > 0) ++k;
    s.r[t] = k;
  }
}

void draw_path(Rng& rng, SVState& s, const VectorXd& ystar) {
  const auto& mix = log_chi2_mixture();
  const int T = s.T();
  const double q = 1.0 / s.sigma2_eta, phi = s.phi, mu = s.mu;
  VectorXd d = VectorXd::Zero(T + 1), e = VectorXd::Constant(T, -phi * q), c = VectorXd::Zero(T + 1);
  d[0] = (1 - phi * phi) * q;
  c[0] = (1 - phi * phi) * q * mu;
  for (int t = 1; t <= T; ++t) {
    // (h_t - mu - phi (h_{t-1} - mu))^2 / sigma2_eta
    d[t] += q;
    d[t - 1] += phi * phi * q;
    const double m = (1 - phi) * mu * q;
    c[t] += m;
    c[t - 1] -= phi * m;
    const auto& comp = mix[s.r[t - 1]];
    d[t] += 1.0 / comp.var;
    c[t] += (ystar[t - 1] - comp.mean) / comp.var;
  }
  s.h = sample_tridiag(rng, d, e, c);
}

double ar_sum_squares(const SVState& s, double mu, double phi) {
  const int T = s.T();
  double ss = (1 - phi * phi) * (s.h[0] - mu) * (s.h[0] - mu);
  for (int t = 1; t <= T; ++t) {
    const double u = s.h[t] - mu - phi * (s.h[t - 1] - mu);
    ss += u * u;
  }
  return ss;
}

void draw_parameters(Rng& rng, SVState& s, const SVPrior& prior) {
  const int T = s.T();
  // phi: independence proposal from the AR regression, prior and h_0 term in the ratio.
  {
    double sxx = 0, sxy = 0;
    for (int t = 1; t <= T; ++t) {
      const double x = s.h[t - 1] - s.mu, y = s.h[t] - s.mu;
      sxx += x * x;
      sxy += x * y;
    }
    if (sxx > 0) {
      const double phat = sxy / sxx, sd = std::sqrt(s.sigma2_eta / sxx);
      const double prop = phat + sd * rng.normal();
      ++s.phi_proposed;
      if (std::abs(prop) < 1) {
        auto logt = [&](double ph) {
          const double v0 = s.sigma2_eta / (1 - ph * ph);
          const double h0 = s.h[0] - s.mu;
          return log_beta_density(0.5 * (ph + 1), prior.phi_a, prior.phi_b) - 0.5 * std::log(v0) -
                 0.5 * h0 * h0 / v0;
        };
        if (std::log(rng.uniform()) < logt(prop) - logt(s.phi)) {
          s.phi = prop;
          ++s.phi_accepted;
        }
      }
    }
  }
  // sigma2_eta ~ GIG(1/2 - (T+1)/2, 1/B, SS) under the G(1/2, 1/(2B)) prior
  {
    const double ss = std::max(ar_sum_squares(s, s.mu, s.phi), 1e-300);
    s.sigma2_eta = sample_gig(rng, {-0.5 * T, 1.0 / prior.sigma_eta_B, ss});
  }
  // mu: conjugate Gaussian
  {
    const double q = 1.0 / s.sigma2_eta, phi = s.phi;
    double prec = 1.0 / prior.mu_var + (1 - phi * phi) * q + T * (1 - phi) * (1 - phi) * q;
    double lin = prior.mu_mean / prior.mu_var + (1 - phi * phi) * q * s.h[0];
    for (int t = 1; t <= T; ++t) lin += (1 - phi) * q * (s.h[t] - phi * s.h[t - 1]);
    s.mu = lin / prec + rng.normal() / std::sqrt(prec);
  }
}

}  // namespace

void sv_sweep_transformed(Rng& rng, SVState& s, const VectorXd& ystar, const SVPrior& prior) {
  if (ystar.size() != s.T()) throw UserError("sv", "residual length does not match SV state");
  draw_indicators(rng, s, ystar);
  draw_path(rng, s, ystar);
  draw_parameters(rng, s, prior);
}

void sv_sweep(Rng& rng, SVState& s, const VectorXd& residuals, const SVPrior& prior) {
  const VectorXd ystar = (residuals.array().square() + prior.offset).log();
  sv_sweep_transformed(rng, s, ystar, prior);
}

SVState sample_sv_prior(Rng& rng, int T, const SVPrior& prior) {
  SVState s;
  s.mu = prior.mu_mean + std::sqrt(prior.mu_var) * rng.normal();
  s.phi = 2 * rng.beta(prior.phi_a, prior.phi_b) - 1;
  s.sigma2_eta = prior.sigma_eta_B * rng.chi_square(1.0);
  s.h.resize(T + 1);
  s.h[0] = s.mu + std::sqrt(s.sigma2_eta / (1 - s.phi * s.phi)) * rng.normal();
  for (int t = 1; t <= T; ++t)
    s.h[t] = s.mu + s.phi * (s.h[t - 1] - s.mu) + std::sqrt(s.sigma2_eta) * rng.normal();
  s.r.assign(T, 4);
  return s;
}

double sv_forecast_variance(Rng& rng, const SVState& s) {
  return std::exp(sv_forecast_log_mean(s) + std::sqrt(s.sigma2_eta) * rng.normal());
}

double sv_log_prior(const SVState& s, const SVPrior& prior) {
  if (!(std::abs(s.phi) < 1) || !(s.sigma2_eta > 0)) return -INFINITY;
  const double d = s.mu - prior.mu_mean;
  return -0.5 * d * d / prior.mu_var + log_beta_density(0.5 * (s.phi + 1), prior.phi_a, prior.phi_b) +
         log_gamma_density(s.sigma2_eta, 0.5, 0.5 / prior.sigma_eta_B);
}

}  // namespace tvp
