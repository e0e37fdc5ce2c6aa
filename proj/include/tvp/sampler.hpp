#pragma once
// MCMC for the univariate TVP regression: ridge two-block sampler, the
// global-local shrinkage sampler with ASIS, hyperparameter moves, and the
// chain driver with persisted draws.
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "tvp/priors.hpp"
#include "tvp/rng.hpp"
#include "tvp/statespace.hpp"
#include "tvp/sv.hpp"
#include "tvp/types.hpp"

namespace tvp {

enum class PathSampler { AWOL, FFBS };

struct SamplerOptions {
  PathSampler path = PathSampler::AWOL;
  int asis = -1;             // -1: on for shrinkage priors, off for ridge; 0 off; 1 on
  bool keep_sign = false;    // keep the sign of sqrt_theta through the interweaving step
  bool prior_only = false;   // drop the likelihood (prior simulation through the chain)
  bool static_theta = false; // theta forced to 0 (constant-coefficient regression)
  double target_accept = 0.35;
  bool store_paths = false;  // keep centered paths (and SV h paths) for every stored draw
  std::string init_model = "full";  // spike-and-slab start: full | static
};

struct ModelSpec {
  PriorConfig prior;
  SamplerOptions opt;
};

// Adaptive random-walk MH bookkeeping for one scalar hyperparameter.
struct MHStat {
  double log_step = std::log(0.5);
  long proposed = 0;
  long accepted = 0;
  long adapt_n = 0;
  double rate() const { return proposed ? double(accepted) / proposed : 0.0; }
};

struct BranchMH {
  MHStat a, c, phi;
};

struct SpikeSlabState {
  std::vector<int> code;  // per j: 0 zero, 1 fixed, 2 dynamic
  double pi_delta = 0.5, pi_gamma = 0.5;
  // Student-t slab scales: beta_j ~ N(0, s2 lambda2/tau2_j), sqrt_theta_j ~ N(0, s2 kappa2/xi2_j)
  VectorXd tau2, xi2;
  double lambda2 = 1, kappa2 = 1;
  // proposed/accepted single moves indexed [from][to]
  std::array<std::array<long, 3>, 3> proposed{};
  std::array<std::array<long, 3>, 3> accepted{};
};

struct SamplerState {
  StatePath path;  // non-centered, p x (T+1)
  TVPParams params;
  std::optional<ScaleState> theta_scales;
  std::optional<ScaleState> beta_scales;
  BranchMH theta_mh, beta_mh;
  double C0 = 1.0;
  std::optional<SVState> sv;
  std::optional<SpikeSlabState> ss;
  long theta_clamped = 0;  // interweaving steps that hit the theta floor
  long iteration = 0;
};

SamplerState initial_state(const TimeSeriesData& data, const ModelSpec& spec);

// One full sweep for any configured prior. `adapt` enables MH step adaptation (burn-in).
void gibbs_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec,
                 bool adapt = false);

// Individual blocks (exposed for tests).
void draw_path(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec);
void draw_sigma_and_alpha(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec);
void ridge_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec);
void shrinkage_sweep(Rng& rng, SamplerState& s, const TimeSeriesData& data, const ModelSpec& spec,
                     bool adapt = false);
void asis_interweave(Rng& rng, SamplerState& s, const ModelSpec& spec);
void update_local_scales(Rng& rng, SamplerState& s, const ModelSpec& spec);
void update_globals(Rng& rng, SamplerState& s, const ModelSpec& spec, bool adapt = false);
// Prior variances of sqrt_theta_j and beta_j implied by the current state.
double theta_prior_var(const SamplerState& s, const ModelSpec& spec, int j);
double beta_prior_var(const SamplerState& s, const ModelSpec& spec, int j);
bool asis_enabled(const ModelSpec& spec);
// Draw a complete state (parameters, scales, path, sigma) from the prior.
SamplerState sample_prior_state(Rng& rng, const ModelSpec& spec, int T, int p);
// y_t = x_t beta + x_t Diag(sqrt_theta) tb_t + eps_t for the given state.
VectorXd simulate_y(Rng& rng, const SamplerState& s, const MatrixXd& X);
VectorXd residuals(const SamplerState& s, const TimeSeriesData& data);

struct ChainControl {
  int n_burn = 1000;
  int n_draws = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  std::string checkpoint_path;  // written if the chain aborts (and at the end when set)
};

// Columnar draw store with provenance.
struct DrawsStore {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<StatePath> paths;     // centered beta paths (store_paths)
  std::vector<VectorXd> h_paths;    // SV log-variance paths h_0..h_T
  std::vector<std::vector<int>> codes;  // spike-and-slab indicators per draw
  std::vector<std::string> labels;
  std::uint64_t seed = 0;
  std::string config_hash;
  int thin = 1, n_burn = 0;
  nlohmann::json diagnostics;

  int n_draws() const { return columns.empty() ? 0 : static_cast<int>(columns[0].size()); }
  int index(const std::string& name) const;  // -1 if absent
  const std::vector<double>& column(const std::string& name) const;
  bool has(const std::string& name) const { return index(name) >= 0; }
  // Parameters of draw m (sigma2 per-t when SV paths are stored).
  TVPParams params(int m) const;
  int p() const;
};

// Append the current state as one stored draw (column layout fixed by the first call).
void record_draw(DrawsStore& ds, const SamplerState& s, const ModelSpec& spec);
// Zero the acceptance/clamp counters (called at the end of burn-in).
void reset_diagnostics(SamplerState& s);
nlohmann::json chain_diagnostics(const SamplerState& s, const ModelSpec& spec);

DrawsStore run_chain(const TimeSeriesData& data, const ModelSpec& spec, const ChainControl& ctl,
                     const SamplerState* start = nullptr);
// Independent chains on stream-split seeds, run by up to `threads` workers.
std::vector<DrawsStore> run_chains(const TimeSeriesData& data, const ModelSpec& spec,
                                   const ChainControl& ctl, int n_chains, int threads = 1);

// Deterministic parallel loop: f(i) for i in [0, n); results must not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

// Checkpoint snapshot (JSON), including the RNG engine state.
nlohmann::json state_to_json(const SamplerState& s, const Rng& rng);
SamplerState state_from_json(const nlohmann::json& j, Rng* rng = nullptr);

}  // namespace tvp
