#include <gtest/gtest.h>

#include <boost/math/distributions/inverse_gaussian.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "test_util.hpp"
#include "tvp/special.hpp"

using namespace tvp;
using namespace tvptest;

namespace {

// U(a,b,z) from its integral representation, substituting t = s^(1/a) to remove the
// endpoint singularity: U = 1/Gamma(a+1) int_0^inf exp(-z s^(1/a)) (1 + s^(1/a))^(b-a-1) ds
double u_quadrature(double a, double b, double z) {
  boost::math::quadrature::exp_sinh<double> es;
  auto f = [&](double s) {
    const double t = std::pow(s, 1.0 / a);
    if (!std::isfinite(t)) return 0.0;
    return std::exp(-z * t + (b - a - 1) * std::log1p(t));
  };
  return es.integrate(f, 1e-14) / std::tgamma(a + 1);
}

struct Frozen {
  double a, b, z, u;
};

// reference values computed with mpmath.hyperu at 40 digits
const Frozen kU[] = {
    {1, 1, 1, 0.59634736232319407434},
    {0.5, 0.5, 0.1, 1.2825093897118495901},
    {0.6, 1.4, 0.01, 8.6151422027344533208},
    {0.6, 1.4, 5.0, 0.37290578873660234541},
    {2.5, 0.3, 30.0, 0.00015932198455685821083},
    {0.1, 1.4, 0.0001, 10.142203837656914082},
    {3.0, 2.0, 0.5, 0.34636170939533691396},
    {0.55, -1.2, 2.0, 0.44460355260419095368},
    {1.2, 3.5, 80.0, 0.0053053396992766524017},
    {0.15, 1.45, 250.0, 0.43690502472825700623},
};

}  // namespace

TEST(ConfHypergeomU, FrozenReferenceValues) {
  for (const auto& f : kU) EXPECT_NEAR(conf_hypergeom_u(f.a, f.b, f.z) / f.u, 1.0, 1e-9) << f.a << " " << f.b << " " << f.z;
}

TEST(ConfHypergeomU, UnitArgumentsMatchQuadrature) {
  boost::math::quadrature::exp_sinh<double> es;
  const double q = es.integrate([](double t) { return std::exp(-t) / (1 + t); }, 1e-15);
  EXPECT_NEAR(conf_hypergeom_u(1, 1, 1) / q, 1.0, 1e-9);
}

TEST(ConfHypergeomU, RandomGridMatchesIntegralRepresentation) {
  Rng rng(42);
  for (int i = 0; i < 40; ++i) {
    const double a = 0.05 + 3 * rng.uniform();
    const double b = -1 + 4 * rng.uniform();
    const double z = std::exp(-5 + 10 * rng.uniform());
    EXPECT_NEAR(conf_hypergeom_u(a, b, z) / u_quadrature(a, b, z), 1.0, 1e-8) << a << " " << b << " " << z;
  }
}

TEST(ConfHypergeomU, LogFormAgreesAndExtremeArgumentsAreFinite) {
  EXPECT_NEAR(log_conf_hypergeom_u(0.6, 1.4, 5.0), std::log(0.37290578873660234541), 1e-10);
  EXPECT_TRUE(std::isfinite(log_conf_hypergeom_u(0.1, 1.4, 1e-300)));
  EXPECT_TRUE(std::isfinite(log_conf_hypergeom_u(0.1, 1.4, 1e12)));
  EXPECT_NEAR(log_conf_hypergeom_u(0.6, 1.4, 1e8), -0.6 * std::log(1e8), 1e-6);
}

TEST(Bessel, LogKMatchesBoost) {
  for (double nu : {-0.4, 0.0, 0.3, 2.5})
    for (double x : {0.01, 0.7, 5.0, 40.0})
      EXPECT_NEAR(log_bessel_k(nu, x), std::log(boost::math::cyl_bessel_k(nu, x)), 1e-9);
  EXPECT_TRUE(std::isfinite(log_bessel_k(0.5, 2000.0)));
}

TEST(Gig, MeanMatchesBesselRatio) {
  Rng rng(7);
  const GIGParams g{0.3, 2, 1};
  const int n = 1000000;
  std::vector<double> x(n);
  for (auto& v : x) v = sample_gig(rng, g);
  // reference from mpmath: sqrt(b/a) K_{p+1}(sqrt(ab)) / K_p(sqrt(ab))
  const double ref = 1.0892039092800907288;
  EXPECT_NEAR(gig_mean(g), ref, 1e-10);
  EXPECT_LT(std::abs(mean(x) - ref), 4 * std::sqrt(variance(x) / n));
}

TEST(Gig, HalfOrderIsInverseGaussian) {
  Rng rng(8);
  const double a = 2.0, b = 3.0;
  std::vector<double> x(20000);
  for (auto& v : x) v = sample_gig(rng, {-0.5, a, b});
  const boost::math::inverse_gaussian ig(std::sqrt(b / a), b);
  EXPECT_GT(ks_test(x, [&](double v) { return boost::math::cdf(ig, v); }), 0.01);
}

TEST(Gig, AllRegimesMatchDensity) {
  // regimes: small omega, no shift, mode shift
  for (const GIGParams g : {GIGParams{0.2, 1e-3, 1e-3}, GIGParams{0.4, 0.5, 0.8}, GIGParams{3.0, 4.0, 5.0},
                            GIGParams{-2.5, 1e-4, 0.3}}) {
    Rng rng(9);
    std::vector<double> x(20000);
    for (auto& v : x) v = sample_gig(rng, g);
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    const double lnorm = std::log(es.integrate([&](double y) { return std::exp(gig_log_density(y, g)); }));
    EXPECT_NEAR(lnorm, 0.0, 1e-6);
    std::sort(x.begin(), x.end());
    auto cdf = [&](double v) {
      if (v <= 0) return 0.0;
      return ts.integrate([&](double y) { return std::exp(gig_log_density(y, g)); }, 0.0, v);
    };
    // KS distance evaluated on every 20th order statistic keeps the quadrature count small
    double D = 0;
    const double n = x.size();
    for (size_t i = 0; i < x.size(); i += 20) {
      const double F = cdf(x[i]);
      D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    EXPECT_LT(D, 1.63 / std::sqrt(n) + 0.01) << "p=" << g.p << " a=" << g.a << " b=" << g.b;
  }
}

TEST(Gig, TinyScaleProducesFinitePositiveDraws) {
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    const double v = sample_gig(rng, {-0.4, 0.2, 1e-200});
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
}

TEST(Tpb, IntegratesToOne) {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (const TPBParams p : {TPBParams{0.1, 0.1, 2}, TPBParams{0.5, 0.5, 1}, TPBParams{1, 3, 0.4}}) {
    // second argument: signed distance to the nearer endpoint
    auto f = [&](double r, double rc) {
      const double lo = rc < 0 ? -rc : r, hi = rc > 0 ? rc : 1 - r;
      return std::exp(tpb_log_density(lo, hi, p));
    };
    const double I = ts.integrate(f, 0.0, 1.0, 1e-12);
    EXPECT_NEAR(I, 1.0, 1e-8);
  }
}

TEST(Tpb, SymmetricWhenShapesEqualAndPhiOne) {
  for (double r = 0.01; r < 1; r += 0.049)
    EXPECT_NEAR(tpb_log_density(r, {0.5, 0.5, 1}), tpb_log_density(1 - r, {0.5, 0.5, 1}), 1e-12);
}

TEST(Tpb, SamplerMatchesDensity) {
  Rng rng(3);
  const TPBParams p{0.3, 0.7, 1.5};
  std::vector<double> x(20000);
  for (auto& v : x) v = sample_tpb(rng, p);
  // rho = 1/(1+psi) with psi/phi ~ BetaPrime(a, c): P(rho <= r) = P(psi >= (1-r)/r)
  auto cdf = [&](double r) {
    const double w = (1 - r) / (r * p.phi);
    return boost::math::ibetac(p.a, p.c, w / (1 + w));
  };
  EXPECT_GT(ks_test(x, cdf), 0.01);
}

TEST(MarginalDensity, FrozenValues) {
  // mpmath reference
  EXPECT_NEAR(marginal_sqrt_theta_density(0.01, 0.1, 0.1, 1) / 2.3335038932833081499, 1, 1e-9);
  EXPECT_NEAR(marginal_sqrt_theta_density(0.5, 0.1, 0.1, 1) / 0.081823349790364226001, 1, 1e-9);
  EXPECT_NEAR(marginal_sqrt_theta_density(3.0, 0.1, 0.1, 1) / 0.011946868409623928643, 1, 1e-9);
  EXPECT_NEAR(marginal_sqrt_theta_density(0.2, 0.5, 0.5, 1) / 0.43461106500104720332, 1, 1e-9);
  EXPECT_NEAR(marginal_sqrt_theta_density(1.0, 0.2, 0.3, 2) / 0.07701470063383194644, 1, 1e-9);
}

TEST(MarginalDensity, IntegratesToOne) {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double a = 0.1, c = 0.1, phi = 1;
  auto f = [&](double x) { return marginal_sqrt_theta_density(x, a, c, phi); };
  const double I = 2 * (ts.integrate(f, 0.0, 1.0) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity()));
  EXPECT_NEAR(I, 1.0, 1e-6);
}

TEST(MarginalDensity, NormalGammaLimitIntegratesToOne) {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  auto f = [&](double x) { return std::exp(log_normal_gamma_density(x, 0.2, 2.0)); };
  EXPECT_NEAR(2 * (ts.integrate(f, 0.0, 1.0) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity())), 1.0,
              1e-6);
}

TEST(Densities, BetaPrimeAndFAgree) {
  // X ~ BetaPrime(a,b) <=> (b/a) X ~ F(2a, 2b)
  const double a = 0.7, b = 2.3;
  for (double x : {0.1, 1.0, 4.0})
    EXPECT_NEAR(log_beta_prime_density(x, a, b), log_f_density(b / a * x, 2 * a, 2 * b) + std::log(b / a), 1e-12);
  Rng rng(1);
  std::vector<double> s(20000);
  for (auto& v : s) v = sample_beta_prime(rng, a, b);
  EXPECT_GT(ks_test(s,
                    [&](double x) {
                      // P(X <= x) = I_{x/(1+x)}(a, b)
                      return boost::math::ibeta(a, b, x / (1 + x));
                    }),
            0.01);
}
