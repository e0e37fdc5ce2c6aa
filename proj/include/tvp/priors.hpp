#pragma once
// Prior taxonomy for (beta_j, sqrt_theta_j, sigma^2).
#include <json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tvp/rng.hpp"
#include "tvp/types.hpp"

namespace tvp {

struct InverseGammaPrior {  // theta_j ~ G^-1(s0, S0)
  double s0 = 0.001;
  double S0 = 0.001;
};

// sqrt_theta_j ~ N(0, tau) or N(0, sigma2 tau) <=> theta_j ~ G(1/2, 1/(2 tau [sigma2]))
struct RidgePrior {
  double tau = 0.05;
  bool scale_by_sigma2 = false;
};

// x_j | psi_j ~ N(0, psi_j), psi_j | kappa2_j ~ G(a, a kappa2_j / 2),
// kappa2_j ~ G(c, c / B2). With c = +inf the kappa2 layer is absent and kappa2_j = B2.
// theta branch: x = sqrt_theta, psi = xi^2, B2 = kappa_B^2.
// beta branch:  x = beta, psi = lambda, B2 = lambda_B^2 (rate a kappa2/2 plays tau_j^2).
struct TripleGammaPrior {
  std::string alias = "triple_gamma";  // lasso | double_gamma | horseshoe | triple_gamma
  double a = 0.1;
  std::optional<double> c;  // nullopt means c = +inf
  double B2 = 2.0;
  bool learn_a = false;
  bool learn_c = false;
  bool learn_phi = false;  // phi ~ BetaPrime(c, a); requires finite c
  bool learn_B2 = false;   // B2 ~ G(d1, d2)
  double alpha_a = 5, beta_a = 10;
  double alpha_c = 5, beta_c = 10;
  double d1 = 0.001, d2 = 0.001;

  bool finite_c() const { return c.has_value(); }
  double tau() const { return 2.0 / B2; }
  // phi = 2 c / (a B2) = tau c / a (finite c only)
  double phi() const { return 2.0 * (*c) / (a * B2); }
};

enum class SlabKind { Gaussian, Fractional, StudentT };

struct SpikeSlabPrior {
  SlabKind slab = SlabKind::StudentT;
  double tau = 1.0;  // Gaussian slab: variance sigma2 tau B
  double b = 1e-4;   // fractional slab
  double a_tau = 0.5, a_xi = 0.5, a_lambda = 0.5, a_kappa = 0.5;  // Student-t slab
  bool pi_hierarchical = true;
  double pi_delta = 0.5, pi_gamma = 0.5;
  double a0_delta = 1, b0_delta = 1, a0_gamma = 1, b0_gamma = 2;
  double B_delta = 1, B_gamma = 1;
  int enumeration_cap = 9;
  std::string step = "auto";  // auto | enumerate | single_move
};

using ThetaPrior = std::variant<InverseGammaPrior, RidgePrior, TripleGammaPrior, SpikeSlabPrior>;

struct NormalBetaPrior {  // beta_j ~ N(0, tau [sigma2])
  double tau = 10.0;
  bool scale_by_sigma2 = false;
};

using BetaPrior = std::variant<NormalBetaPrior, TripleGammaPrior>;

struct SVPrior {
  double mu_mean = 0, mu_var = 100;
  double phi_a = 5, phi_b = 1.5;  // (phi+1)/2 ~ Beta(a, b)
  double sigma_eta_B = 1;         // sigma_eta^2 ~ G(1/2, 1/(2B))
  double offset = 1e-8;           // log(eps^2 + offset)
};

struct SigmaPrior {
  bool sv = false;
  double c0 = 0.5, C0 = 1.0;  // sigma2 ~ G^-1(c0, C0)
  bool hierarchical_C0 = false;
  double g0 = 5, g1 = 10.0 / 3.0;  // C0 ~ G(g0, g1)
  SVPrior svp;
};

struct PriorConfig {
  ThetaPrior theta;
  BetaPrior beta;
  SigmaPrior sigma;

  bool is_spike_slab() const { return std::holds_alternative<SpikeSlabPrior>(theta); }
};

// Parse and normalize (aliases resolved). Throws UserError with a field path.
PriorConfig prior_from_json(const nlohmann::json& j);
ThetaPrior theta_prior_from_json(const nlohmann::json& j);
BetaPrior beta_prior_from_json(const nlohmann::json& j);
SigmaPrior sigma_prior_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PriorConfig& p);
nlohmann::json to_json(const ThetaPrior& p);
nlohmann::json to_json(const BetaPrior& p);
nlohmann::json to_json(const SigmaPrior& p);
// Alias helpers used by the parser.
TripleGammaPrior make_lasso(double B2 = 2.0);
TripleGammaPrior make_double_gamma(double a, double B2 = 2.0);
TripleGammaPrior make_horseshoe();
TripleGammaPrior make_triple_gamma(double a, double c, double B2);

std::string describe(const ThetaPrior& p);

// One branch of the continuous hierarchy, evaluated or drawn.
struct ScaleState {
  VectorXd psi;
  VectorXd kappa2;  // empty when c = +inf
  double a = 0.1;
  double c = 0.1;  // ignored when !finite_c
  bool finite_c = true;
  double B2 = 2.0;
  double phi() const { return 2.0 * c / (a * B2); }
  // per-j rate of psi_j: a kappa2_j / 2
  double rate(int j) const { return 0.5 * a * (finite_c ? kappa2[j] : B2); }
};

ScaleState initial_scale_state(const TripleGammaPrior& p, int dim);

// Out-of-support arguments give -inf; this is distinct from NumericalError.
double log_hierarchy_density(const TripleGammaPrior& prior, const ScaleState& s, const VectorXd& x);
// Hyperprior terms only (active learn flags), on the natural scale of a, c, phi or B2.
double log_hyperprior_density(const TripleGammaPrior& prior, const ScaleState& s);
double log_ridge_density(const RidgePrior& prior, const VectorXd& sqrt_theta, double sigma2 = 1.0);
double log_inverse_gamma_theta_density(const InverseGammaPrior& prior, const VectorXd& theta);

// Joint log prior of all active continuous layers for beta and sqrt_theta.
struct PriorPoint {
  VectorXd beta;
  VectorXd sqrt_theta;
  double sigma2 = 1.0;
  std::optional<ScaleState> theta_scales;
  std::optional<ScaleState> beta_scales;
};
double log_prior_density(const PriorConfig& cfg, const PriorPoint& pt);

// Ancestral draw of n iid (given globals) elements through the full hierarchy,
// including any learned globals drawn from their hyperpriors.
struct HierarchyDraw {
  VectorXd x;  // sqrt_theta (or beta) draws
  ScaleState scales;
};
HierarchyDraw sample_shrinkage_hierarchy(Rng& rng, const TripleGammaPrior& prior, int n);
VectorXd sample_ridge(Rng& rng, const RidgePrior& prior, int n, double sigma2 = 1.0);

// Indicator prior for (delta_j, gamma_j): code 0 zero, 1 fixed, 2 dynamic.
double log_indicator_prior_fixed(const std::vector<int>& code, double pi_delta, double pi_gamma);
// pi's integrated out under their Beta hyperpriors.
double log_indicator_prior_integrated(const std::vector<int>& code, const SpikeSlabPrior& ss);

}  // namespace tvp
