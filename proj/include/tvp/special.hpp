#pragma once
// Special functions, densities and variate generators used by the priors and
// samplers. Gamma distributions use (shape, rate); GIG(p, a, b) has density
// proportional to y^(p-1) exp(-(a y + b / y) / 2).
#include "tvp/rng.hpp"

namespace tvp {

struct GIGParams {
  double p;
  double a;
  double b;
};

// Uniformly bounded rejection sampler (ratio-of-uniforms with and without
// mode shift, plus a dedicated hat for small sqrt(ab) and |p| < 1).
// Requires a > 0 and b > 0.
double sample_gig(Rng& rng, const GIGParams& g);
double gig_log_density(double x, const GIGParams& g);
double gig_mean(const GIGParams& g);
// Which of the three rejection regimes handles (|p|, sqrt(ab)): 0 shift, 1 no shift, 2 small omega.
int gig_regime(const GIGParams& g);

// Confluent hypergeometric function of the second kind, a > 0, z > 0.
double conf_hypergeom_u(double a, double b, double z);
double log_conf_hypergeom_u(double a, double b, double z);
enum class URegime { Series, Integral, Asymptotic };
// Regime chosen for (a, b, z) before any internal fallback.
URegime u_regime(double a, double b, double z);

// log of the modified Bessel function K_nu(x), x > 0, valid for large x.
double log_bessel_k(double nu, double x);

struct TPBParams {
  double a;
  double c;
  double phi;
};

double tpb_log_density(double rho, const TPBParams& t);
// Same density with 1 - rho supplied separately (accurate near rho = 1).
double tpb_log_density(double rho, double rho_c, const TPBParams& t);
double tpb_density(double rho, const TPBParams& t);
double sample_tpb(Rng& rng, const TPBParams& t);

// Marginal density of sqrt(theta) under the triple gamma prior (finite c):
//   Gamma(c+1/2) / (sqrt(2 pi phi) B(a,c)) * U(c+1/2, 3/2-a, x^2/(2 phi)).
double log_marginal_sqrt_theta_density(double x, double a, double c, double phi);
double marginal_sqrt_theta_density(double x, double a, double c, double phi);
// Infinite-c limit (normal-gamma): sqrt(theta) | xi2 ~ N(0, xi2), xi2 ~ G(a, a kappa2 / 2).
double log_normal_gamma_density(double x, double a, double kappa2);

double log_beta_fn(double a, double b);
double log_gamma_density(double x, double shape, double rate);
double log_inv_gamma_density(double x, double shape, double scale);
double log_beta_density(double x, double a, double b);
double log_beta_prime_density(double x, double a, double b);
// F(d1, d2) density of x.
double log_f_density(double x, double d1, double d2);
double sample_beta_prime(Rng& rng, double a, double b);

}  // namespace tvp
