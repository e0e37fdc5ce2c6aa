#pragma once
// Dirac spike-and-slab variance/variable selection on the non-centered regression
//   y_t = sum_j x_tj beta_j + sum_j x_tj tb_jt sqrt_theta_j + eps_t.
#include <vector>

#include "tvp/sampler.hpp"

namespace tvp {

struct ModelCounts {
  int p_d = 0, p_f = 0, p_0 = 0;
};
ModelCounts counts(const std::vector<int>& code);

// Cross-products of the full 2p-column non-centered design given the path.
struct RegressionMoments {
  MatrixXd G;  // Z'Z
  VectorXd b;  // Z'y
  double yy = 0;
  int T = 0, p = 0;
  // Design and response, when available: residual sums are then formed directly
  // instead of as yy - b'Q^{-1}b, which cancels badly for near-perfect fits.
  MatrixXd Z;
  VectorXd y;
};
RegressionMoments regression_moments(const StatePath& path, const TimeSeriesData& data);

// Column indices (into the 2p design) switched on by a model.
std::vector<int> active_columns(const std::vector<int>& code);

// Slab prior variances (relative to sigma2) for the active columns.
VectorXd slab_variances(const std::vector<int>& code, const SpikeSlabPrior& ss,
                        const SpikeSlabState* st);

// log p(y | code, z) with sigma2 ~ G^-1(c0, C0) integrated out. Rank deficiency gives -inf.
double log_marginal_likelihood(const std::vector<int>& code, const RegressionMoments& mom,
                               const SpikeSlabPrior& ss, const SpikeSlabState* st, double c0,
                               double C0);

double log_indicator_prior(const std::vector<int>& code, const SpikeSlabPrior& ss, const SpikeSlabState& st);

// Enumerate all 3^p models: returns codes in base-3 order and normalized probabilities.
struct Enumeration {
  std::vector<std::vector<int>> codes;
  std::vector<double> prob;
};
Enumeration enumerate_models(const RegressionMoments& mom, const SpikeSlabPrior& ss,
                             const SpikeSlabState& st, double c0, double C0);
int model_index(const std::vector<int>& code);  // base-3 index

void full_enumeration_step(Rng& rng, SpikeSlabState& st, const RegressionMoments& mom,
                           const SpikeSlabPrior& ss, double c0, double C0);
void single_move_step(Rng& rng, SpikeSlabState& st, const RegressionMoments& mom,
                      const SpikeSlabPrior& ss, double c0, double C0);

// Full model-space sweep: indicators | z, y; sigma2; active coefficients; path; pi's; slab scales.
void spike_slab_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec);

}  // namespace tvp
