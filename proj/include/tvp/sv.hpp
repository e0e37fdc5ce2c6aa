#pragma once
// AR(1) log-volatility block, sampled through the 10-component Gaussian
// mixture approximation to log chi^2_1.
#include <array>
#include <vector>

#include "tvp/priors.hpp"
#include "tvp/rng.hpp"
#include "tvp/types.hpp"

namespace tvp {

struct SVState {
  VectorXd h;  // h_0..h_T
  double mu = 0;
  double phi = 0.9;
  double sigma2_eta = 0.05;
  std::vector<int> r;  // mixture indicators, length T
  // independence-MH bookkeeping for phi
  long phi_accepted = 0;
  long phi_proposed = 0;

  int T() const { return static_cast<int>(h.size()) - 1; }
  VectorXd sigma2() const { return h.tail(T()).array().exp(); }
};

struct MixtureComponent {
  double prob, mean, var;
};
const std::array<MixtureComponent, 10>& log_chi2_mixture();

SVState initial_sv_state(int T, double log_var = 0.0);

// One full block update given host-equation residuals eps_t = y_t - x_t beta_t.
void sv_sweep(Rng& rng, SVState& s, const VectorXd& residuals, const SVPrior& prior);
// Same update on the transformed scale y*_t = log(eps_t^2 + offset).
void sv_sweep_transformed(Rng& rng, SVState& s, const VectorXd& ystar, const SVPrior& prior);
// Draw from the SV prior (h path and parameters).
SVState sample_sv_prior(Rng& rng, int T, const SVPrior& prior);

// One-step-ahead variance exp(h_{T+1}), h_{T+1} = mu + phi (h_T - mu) + sigma_eta nu.
double sv_forecast_variance(Rng& rng, const SVState& s);
// Moments of log sigma^2_{T+1} given the state.
inline double sv_forecast_log_mean(const SVState& s) { return s.mu + s.phi * (s.h[s.T()] - s.mu); }

double sv_log_prior(const SVState& s, const SVPrior& prior);

}  // namespace tvp
