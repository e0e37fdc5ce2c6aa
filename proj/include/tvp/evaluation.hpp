#pragma once
// Predictive scoring, coefficient classification and chain diagnostics.
#include <cstdint>
#include <string>
#include <vector>

#include "tvp/multivariate.hpp"
#include "tvp/sampler.hpp"

namespace tvp {

struct PredictiveScore {
  int t = 0;  // 1-based index of the scored observation
  double lpds = 0;
  double cumulative = 0;  // over available points up to t
  int equation = -1;      // -1: univariate or system total
  bool missing = false;
  std::string error;
};

// log (1/M) sum_m N(y_t; mu_m, s2_m) with (mu_m, s2_m) the Kalman one-step predictive of
// draw m. `data` holds rows 1..t; the draws were fitted on rows 1..t-1. Under SV the
// variance at t is a one-step forecast of h (one draw of the log-variance noise per m).
double lpds_one_step(const DrawsStore& draws, const TimeSeriesData& data, std::uint64_t seed = 1);
// Pure-sigma equation (no regressors): mixture of N(0, sigma2_t).
double lpds_one_step_pure(const DrawsStore& draws, double y_t, std::uint64_t seed = 1);

struct RollingOptions {
  int t0 = 0;  // training length of the first window
  ChainControl chain;
  int threads = 1;
};
// Scores y_t for t = t0+1..T, refitting on y_1..y_{t-1} for every t. Seeds per t are
// split from chain.seed so the result does not depend on scheduling.
std::vector<PredictiveScore> rolling_lpds(const TimeSeriesData& data, const ModelSpec& spec,
                                          const RollingOptions& opt);
// Fill `cumulative` as the prefix sum over non-missing points.
void accumulate(std::vector<PredictiveScore>& s);

// Per-t totals over equations; a missing equation makes the total missing.
std::vector<PredictiveScore> multivariate_lpds(const std::vector<std::vector<PredictiveScore>>& per_equation);
// One-step score of row t of a Cholesky-SV system fitted on rows 1..t-1, by equation.
std::vector<double> cholesky_lpds_one_step(const SystemFit& fit, const MultiTimeSeries& data_through_t,
                                           std::uint64_t seed = 1);

struct ClassRow {
  std::string label;
  double p_zero = 0, p_fixed = 0, p_dynamic = 0;
};
using ClassificationTable = std::vector<ClassRow>;

ClassificationTable classify_from_indicators(const std::vector<std::vector<int>>& codes,
                                             const std::vector<std::string>& labels = {});
// Shrinkage coefficient rho = 1 / (1 + psi) per draw; included when rho < threshold.
// Dynamic when sqrt_theta_j is included, fixed when only beta_j is, zero otherwise.
// beta_j counts as included when its prior has no local scale.
ClassificationTable classify_by_threshold(const DrawsStore& draws, double threshold = 0.5);
// Per-draw model codes implied by thresholding (0 zero, 1 fixed, 2 dynamic).
std::vector<std::vector<int>> threshold_codes(const DrawsStore& draws, double threshold = 0.5);

struct EssResult {
  double ess = 0;
  bool constant = false;
};
// Initial-monotone-sequence estimate; needs >= 100 draws.
EssResult effective_sample_size(const std::vector<double>& x);

}  // namespace tvp
