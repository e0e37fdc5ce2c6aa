#include "tvp/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "tvp/types.hpp"

namespace tvp {

namespace {

constexpr double kPi = std::numbers::pi;

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0)
    return (std::sqrt((lambda - 1) * (lambda - 1) + omega * omega) + (lambda - 1)) / omega;
  return omega / (std::sqrt((1 - lambda) * (1 - lambda) + omega * omega) + (1 - lambda));
}

// Standardized target: x^(lambda-1) exp(-omega/2 (x + 1/x)), lambda >= 0.
double rou_shift(Rng& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1), s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1 / xm);
  // Extremes of (x - xm) sqrt(f(x)) from the roots of a cubic (Cardano).
  const double a = -(2 * (lambda + 1) / omega + xm);
  const double b = 2 * (lambda - 1) * xm / omega - 1;
  const double c = xm;
  const double p = b - a * a / 3;
  const double q = 2 * a * a * a / 27 - a * b / 3 + c;
  const double fi = std::acos(-q / (2 * std::sqrt(-(p * p * p) / 27)));
  const double fak = 2 * std::sqrt(-p / 3);
  const double y1 = fak * std::cos(fi / 3) - a / 3;
  const double y2 = fak * std::cos(fi / 3 + 4.0 / 3.0 * kPi) - a / 3;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1 / y2) - nc);
  for (;;) {
    const double U = uminus + rng.uniform() * (uplus - uminus);
    const double V = rng.uniform();
    const double X = U / V + xm;
    if (X <= 0) continue;
    if (std::log(V) <= t * std::log(X) - s * (X + 1 / X) - nc) return X;
  }
}

double rou_noshift(Rng& rng, double lambda, double omega) {
  const double t = 0.5 * (lambda - 1), s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1 / xm);
  const double ym = ((lambda + 1) + std::sqrt((lambda + 1) * (lambda + 1) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1) * std::log(ym) - s * (ym + 1 / ym) - nc);
  for (;;) {
    const double U = um * rng.uniform();
    const double V = rng.uniform();
    const double X = U / V;
    if (std::log(V) <= t * std::log(X) - s * (X + 1 / X) - nc) return X;
  }
}

// 0 <= lambda < 1 and small omega: piecewise hat (constant, power, exponential).
double small_omega(Rng& rng, double lambda, double omega) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1 - lambda);
  const double k0 = std::exp((lambda - 1) * std::log(xm) - 0.5 * omega * (xm + 1 / xm));
  double A[3], k1, k2;
  A[0] = k0 * x0;
  const double L0 = std::log(x0);
  if (x0 >= 2 / omega) {
    k1 = 0;
    A[1] = 0;
    k2 = std::pow(x0, lambda - 1);
    A[2] = k2 * 2 * std::exp(-omega * x0 / 2) / omega;
  } else {
    k1 = std::exp(-omega);
    const double L2 = std::log(2 / omega);
    A[1] = lambda == 0 ? k1 * (L2 - L0)
                       : k1 * std::exp(lambda * L0) * std::expm1(lambda * (L2 - L0)) / lambda;
    k2 = std::pow(2 / omega, lambda - 1);
    A[2] = k2 * 2 * std::exp(-1.0) / omega;
  }
  const double Atot = A[0] + A[1] + A[2];
  const double lo = std::max(x0, 2 / omega);
  for (;;) {
    double V = Atot * rng.uniform();
    double X, hx;
    if (V <= A[0]) {
      X = x0 * V / A[0];
      hx = k0;
    } else if ((V -= A[0]) <= A[1]) {
      if (lambda == 0) {
        X = x0 * std::exp(V / k1);
        hx = k1 / X;
      } else {
        const double x0l = std::exp(lambda * L0);
        X = std::exp(L0 + std::log1p(lambda * V / (k1 * x0l)) / lambda);
        hx = k1 * std::pow(X, lambda - 1);
      }
    } else {
      V -= A[1];
      X = -2 / omega * std::log(std::exp(-omega / 2 * lo) - omega / (2 * k2) * V);
      hx = k2 * std::exp(-omega / 2 * X);
    }
    const double U = rng.uniform() * hx;
    if (std::log(U) <= (lambda - 1) * std::log(X) - omega / 2 * (X + 1 / X)) return X;
  }
}

// lambda >= 2, small omega: Gamma(lambda, omega/2) proposal accepted with prob exp(-omega/(2x));
// the acceptance rate is at least 1 - omega^2 / (4 (lambda - 1)).
double gamma_rejection(Rng& rng, double lambda, double omega) {
  for (;;) {
    const double X = rng.gamma(lambda, 0.5 * omega);
    if (rng.uniform() <= std::exp(-0.5 * omega / X)) return X;
  }
}

double rgamma_fn(double x) {  // 1/Gamma(x), zero at the poles
  if (x <= 0 && x == std::floor(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

double kummer_m(double a, double b, double z) {
  double term = 1, sum = 1;
  for (int n = 0; n < 500; ++n) {
    term *= (a + n) / (b + n) * z / (n + 1);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

bool u_series(double a, double b, double z, double& log_u) {
  const double t1 = std::tgamma(1 - b) * rgamma_fn(a - b + 1) * kummer_m(a, b, z);
  const double t2 = std::tgamma(b - 1) * rgamma_fn(a) * std::pow(z, 1 - b) *
                    kummer_m(a - b + 1, 2 - b, z);
  const double u = t1 + t2;
  if (!std::isfinite(u) || u <= 0 || std::abs(u) < 1e-3 * std::max(std::abs(t1), std::abs(t2)))
    return false;
  log_u = std::log(u);
  return true;
}

bool u_asymptotic(double a, double b, double z, double& log_u) {
  const double a2 = a - b + 1;
  double term = 1, sum = 1;
  bool converged = false;
  for (int n = 0; n < 400; ++n) {
    const double next = term * (a + n) * (a2 + n) / ((n + 1) * (-z));
    if (next == 0) {
      converged = true;
      break;
    }
    if (std::abs(next) >= std::abs(term)) break;
    sum += next;
    term = next;
    if (std::abs(term) < 1e-17 * std::abs(sum)) {
      converged = true;
      break;
    }
  }
  if (!converged || !(sum > 0)) return false;
  log_u = -a * std::log(z) + std::log(sum);
  return true;
}

double softplus(double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

// Integral representation after t = e^u:
//   U = 1/Gamma(a) * int exp(a u - z e^u + (b - a - 1) log(1 + e^u)) du
double u_integral(double a, double b, double z) {
  const double k = b - a - 1;
  auto g = [&](double u) { return a * u - z * std::exp(u) + k * softplus(u); };
  auto dg = [&](double u) {
    const double sig = 1 / (1 + std::exp(-u));
    return a - z * std::exp(u) + k * sig;
  };
  double hi = std::log((std::abs(a) + std::abs(b) + 1) / z) + 1;
  double lo = std::min(hi, 0.0) - 10;
  while (dg(lo) <= 0) lo -= 10;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * (1 + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (dg(mid) > 0 ? lo : hi) = mid;
  }
  const double us = 0.5 * (lo + hi), gs = g(us);
  double L = us - 1, R = us + 1;
  for (double step = 1; g(L) > gs - 60; step *= 2) L -= step;
  for (double step = 1; g(R) > gs - 60; step *= 2) R += step;
  auto f = [&](double u) { return std::exp(g(u) - gs); };
  using boost::math::quadrature::gauss_kronrod;
  // Split at the peak so the adaptive rule sees both flanks separately.
  const double I = gauss_kronrod<double, 61>::integrate(f, L, us, 25, 1e-14) +
                   gauss_kronrod<double, 61>::integrate(f, us, R, 25, 1e-14);
  return gs + std::log(I) - std::lgamma(a);
}

constexpr double kSeriesZ = 2.0;

bool near_integer(double b) { return std::abs(b - std::round(b)) < 0.05; }

double asym_threshold(double a, double b) { return 35 + 2 * (std::abs(a) + std::abs(a - b + 1)); }

}  // namespace

int gig_regime(const GIGParams& g) {
  const double lambda = std::abs(g.p), omega = std::sqrt(g.a * g.b);
  if (lambda >= 2 && omega < 0.1) return 3;
  if (lambda > 2 || omega > 3) return 0;
  if (lambda >= 1 - 2.25 * omega * omega || omega > 0.2) return 1;
  return 2;
}

double sample_gig(Rng& rng, const GIGParams& g) {
  if (!(g.a > 0) || !(g.b > 0) || !std::isfinite(g.a) || !std::isfinite(g.b) || !std::isfinite(g.p))
    throw UserError("gig", "GIG requires finite p and a > 0, b > 0");
  const double lambda = std::abs(g.p);
  const double omega = std::sqrt(g.a * g.b);
  const double alpha = std::sqrt(g.b / g.a);
  double X;
  switch (gig_regime(g)) {
    case 0: X = rou_shift(rng, lambda, omega); break;
    case 1: X = rou_noshift(rng, lambda, omega); break;
    case 3: X = gamma_rejection(rng, lambda, omega); break;
    default: X = small_omega(rng, lambda, omega); break;
  }
  return g.p < 0 ? alpha / X : alpha * X;
}

double log_bessel_k(double nu, double x) {
  nu = std::abs(nu);
  if (x < 1e-100) {
    // leading small-argument terms
    if (nu == 0) return std::log(-std::log(x / 2) - 0.57721566490153286061);
    return std::lgamma(nu) - std::log(2.0) + nu * (std::log(2.0) - std::log(x));
  }
  if (x < 600) return std::log(boost::math::cyl_bessel_k(nu, x));
  // Hankel expansion with the exponential factored out.
  const double mu = 4 * nu * nu;
  double term = 1, sum = 1;
  for (int k = 1; k < 30; ++k) {
    term *= (mu - (2 * k - 1) * (2 * k - 1)) / (k * 8 * x);
    sum += term;
    if (std::abs(term) < 1e-17) break;
  }
  return 0.5 * std::log(kPi / (2 * x)) - x + std::log(sum);
}

double gig_log_density(double x, const GIGParams& g) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  const double omega = std::sqrt(g.a * g.b);
  return 0.5 * g.p * std::log(g.a / g.b) - std::log(2.0) - log_bessel_k(g.p, omega) +
         (g.p - 1) * std::log(x) - 0.5 * (g.a * x + g.b / x);
}

double gig_mean(const GIGParams& g) {
  const double omega = std::sqrt(g.a * g.b);
  return std::sqrt(g.b / g.a) * std::exp(log_bessel_k(g.p + 1, omega) - log_bessel_k(g.p, omega));
}

URegime u_regime(double a, double b, double z) {
  if (z >= asym_threshold(a, b)) return URegime::Asymptotic;
  if (z < kSeriesZ && !near_integer(b)) return URegime::Series;
  return URegime::Integral;
}

double log_conf_hypergeom_u(double a, double b, double z) {
  if (!(a > 0) || !(z > 0) || !std::isfinite(b) || !std::isfinite(z))
    throw UserError("hyperu", "U(a,b,z) requires a > 0, z > 0");
  double lu;
  switch (u_regime(a, b, z)) {
    case URegime::Asymptotic:
      if (u_asymptotic(a, b, z, lu)) return lu;
      break;
    case URegime::Series:
      if (u_series(a, b, z, lu)) return lu;
      break;
    case URegime::Integral: break;
  }
  lu = u_integral(a, b, z);
  if (!std::isfinite(lu)) throw NumericalError("U(a,b,z): evaluation failed");
  return lu;
}

double conf_hypergeom_u(double a, double b, double z) {
  const double lu = log_conf_hypergeom_u(a, b, z);
  if (lu > 709.0) throw NumericalError("U(a,b,z) overflows double precision");
  if (lu < -745.0) throw NumericalError("U(a,b,z) underflows double precision");
  return std::exp(lu);
}

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double tpb_log_density(double rho, const TPBParams& t) {
  if (!(rho > 0 && rho < 1)) throw UserError("tpb", "rho must lie in (0,1)");
  if (!(t.a > 0 && t.c > 0 && t.phi > 0)) throw UserError("tpb", "TPB parameters must be positive");
  return -log_beta_fn(t.a, t.c) + t.c * std::log(t.phi) + (t.c - 1) * std::log(rho) +
         (t.a - 1) * std::log1p(-rho) - (t.a + t.c) * std::log1p((t.phi - 1) * rho);
}

double tpb_log_density(double rho, double rho_c, const TPBParams& t) {
  if (!(rho > 0 && rho_c > 0)) throw UserError("tpb", "rho must lie in (0,1)");
  if (!(t.a > 0 && t.c > 0 && t.phi > 0)) throw UserError("tpb", "TPB parameters must be positive");
  // 1 + (phi - 1) rho = rho_c + phi rho
  return -log_beta_fn(t.a, t.c) + t.c * std::log(t.phi) + (t.c - 1) * std::log(rho) +
         (t.a - 1) * std::log(rho_c) - (t.a + t.c) * std::log(rho_c + t.phi * rho);
}

double tpb_density(double rho, const TPBParams& t) { return std::exp(tpb_log_density(rho, t)); }

double sample_tpb(Rng& rng, const TPBParams& t) {
  // rho = 1 / (1 + phi B), B ~ BetaPrime(a, c)
  const double lb = rng.log_gamma1(t.a) - rng.log_gamma1(t.c) + std::log(t.phi);
  return 1 / (1 + std::exp(lb));
}

double log_marginal_sqrt_theta_density(double x, double a, double c, double phi) {
  if (!(a > 0 && c > 0 && phi > 0)) throw UserError("marginal", "parameters must be positive");
  const double ax = std::abs(x);
  if (ax == 0) return a < 0.5 ? std::numeric_limits<double>::infinity() : 0.0;
  const double lz = 2 * std::log(ax) - std::log(2 * phi);
  const double ua = c + 0.5, ub = 1.5 - a;
  double lu;
  if (lz > -600) {
    lu = log_conf_hypergeom_u(ua, ub, std::exp(lz));
  } else if (ub > 1) {  // z -> 0 limits of U
    lu = std::lgamma(ub - 1) - std::lgamma(ua) + (1 - ub) * lz;
  } else if (ub < 1) {
    lu = std::lgamma(1 - ub) - std::lgamma(ua - ub + 1);
  } else {
    lu = std::log(-lz - boost::math::digamma(ua) - 2 * 0.57721566490153286061) - std::lgamma(ua);
  }
  return std::lgamma(c + 0.5) - 0.5 * std::log(2 * kPi * phi) - log_beta_fn(a, c) + lu;
}

double marginal_sqrt_theta_density(double x, double a, double c, double phi) {
  return std::exp(log_marginal_sqrt_theta_density(x, a, c, phi));
}

double log_normal_gamma_density(double x, double a, double kappa2) {
  const double r = a * kappa2 / 2;
  const double ax = std::abs(x);
  if (ax == 0) return a < 0.5 ? std::numeric_limits<double>::infinity() : 0.0;
  const double nu = a - 0.5;
  return a * std::log(r) - std::lgamma(a) - 0.5 * std::log(2 * kPi) + std::log(2.0) +
         nu * (std::log(ax) - 0.5 * std::log(2 * r)) + log_bessel_k(nu, std::sqrt(2 * r) * ax);
}

double log_gamma_density(double x, double shape, double rate) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1) * std::log(x) - rate * x;
}

double log_inv_gamma_density(double x, double shape, double scale) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1) * std::log(x) - scale / x;
}

double log_beta_density(double x, double a, double b) {
  if (!(x > 0 && x < 1)) return -std::numeric_limits<double>::infinity();
  return (a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - log_beta_fn(a, b);
}

double log_beta_prime_density(double x, double a, double b) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  return (a - 1) * std::log(x) - (a + b) * std::log1p(x) - log_beta_fn(a, b);
}

double log_f_density(double x, double d1, double d2) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  const double s = d1 / d2;
  return std::log(s) + log_beta_prime_density(s * x, d1 / 2, d2 / 2);
}

double sample_beta_prime(Rng& rng, double a, double b) {
  return std::exp(rng.log_gamma1(a) - rng.log_gamma1(b));
}

}  // namespace tvp
