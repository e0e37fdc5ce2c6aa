#include "tvp/priors.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "tvp/special.hpp"

namespace tvp {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UserError("config", where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw UserError("config", where + ": unknown key '" + it.key() + "'");
}

double get_pos(const json& j, const char* key, double def, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw UserError("config", where + "." + key + ": expected a number");
  const double v = j[key].get<double>();
  if (!(v > 0) || !std::isfinite(v)) throw UserError("config", where + "." + key + ": must be positive");
  return v;
}

bool get_bool(const json& j, const char* key, bool def, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) throw UserError("config", where + "." + key + ": expected a boolean");
  return j[key].get<bool>();
}

std::optional<double> get_c(const json& j, const std::string& where) {
  const json& v = j["c"];
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return std::nullopt;
    throw UserError("config", where + ".c: expected a positive number or \"inf\"");
  }
  if (!v.is_number() || !(v.get<double>() > 0))
    throw UserError("config", where + ".c: expected a positive number or \"inf\"");
  return v.get<double>();
}

// Shared parser for the continuous hierarchy; `b2key` is kappa_B2 or lambda_B2.
TripleGammaPrior parse_hierarchy(const json& j, const std::string& kind, const std::string& b2key,
                                 bool require_c, const std::string& where) {
  const std::string learn_b2 = b2key == "kappa_B2" ? "learn_kappa" : "learn_lambda";
  check_keys(j, {"kind", "alias", "a", "c", b2key, "phi", "learn_a", "learn_c", "learn_phi", learn_b2,
                 "alpha_a", "beta_a", "alpha_c", "beta_c", "d1", "d2"},
             where);
  TripleGammaPrior p;
  p.alias = kind;
  if (kind == "triple_gamma" && j.contains("alias")) {
    const json& al = j["alias"];
    static const std::set<std::string> known = {"lasso", "double_gamma", "horseshoe", "triple_gamma"};
    if (!al.is_string() || !known.count(al.get<std::string>()))
      throw UserError("config", where + ".alias: expected lasso | double_gamma | horseshoe | triple_gamma");
    p.alias = al.get<std::string>();
  }
  if (kind == "lasso") {
    if (j.contains("a") || j.contains("c")) throw UserError("config", where + ": lasso fixes a=1, c=inf");
    p.a = 1.0;
    p.c.reset();
    // documented application default: learned global scale under G(0.001, 0.001)
    p.learn_B2 = get_bool(j, learn_b2.c_str(), true, where);
  } else if (kind == "double_gamma") {
    if (j.contains("c")) throw UserError("config", where + ": double_gamma has c=inf");
    p.a = get_pos(j, "a", 0.1, where);
    p.c.reset();
    p.learn_B2 = get_bool(j, learn_b2.c_str(), false, where);
  } else if (kind == "horseshoe") {
    if (j.contains("a") || j.contains("c")) throw UserError("config", where + ": horseshoe fixes a=c=1/2");
    p.a = 0.5;
    p.c = 0.5;
    p.learn_phi = get_bool(j, "learn_phi", true, where);
  } else {  // triple_gamma
    p.a = get_pos(j, "a", 0.1, where);
    if (j.contains("c"))
      p.c = get_c(j, where);
    else if (require_c)
      throw UserError("config", where + ".c: required for the initial-mean triple gamma prior (no default)");
    else
      p.c = 0.1;
    p.learn_phi = get_bool(j, "learn_phi", false, where);
    p.learn_B2 = get_bool(j, learn_b2.c_str(), false, where);
  }
  p.learn_a = get_bool(j, "learn_a", false, where);
  p.learn_c = get_bool(j, "learn_c", false, where);
  if (kind != "triple_gamma" && kind != "horseshoe" && j.contains("learn_phi"))
    throw UserError("config", where + ".learn_phi: requires finite c");
  p.alpha_a = get_pos(j, "alpha_a", 5, where);
  p.beta_a = get_pos(j, "beta_a", 10, where);
  p.alpha_c = get_pos(j, "alpha_c", 5, where);
  p.beta_c = get_pos(j, "beta_c", 10, where);
  p.d1 = get_pos(j, "d1", 0.001, where);
  p.d2 = get_pos(j, "d2", 0.001, where);
  if (j.contains(b2key) && j.contains("phi"))
    throw UserError("config", where + ": give either " + b2key + " or phi, not both");
  p.B2 = get_pos(j, b2key.c_str(), 2.0, where);
  if (p.learn_phi && j.contains(b2key))
    throw UserError("config", where + ": learn_phi makes " + b2key + " derived; give phi instead");
  if (j.contains("phi")) {
    if (!p.finite_c()) throw UserError("config", where + ".phi: requires finite c");
    const double phi = get_pos(j, "phi", 1.0, where);
    p.B2 = 2 * (*p.c) / (p.a * phi);
  } else if (p.learn_phi) {
    p.B2 = 2 * (*p.c) / p.a;  // start at phi = 1
  }
  if (p.learn_phi && !p.finite_c()) throw UserError("config", where + ".learn_phi: requires finite c");
  if (p.learn_phi && p.learn_B2)
    throw UserError("config", where + ": learn_phi and " + learn_b2 + " are mutually exclusive");
  if (p.learn_c && !p.finite_c()) throw UserError("config", where + ".learn_c: requires finite c");
  if (p.learn_a && !(p.a < 0.5))
    throw UserError("config", where + ".a: must lie in (0, 0.5) when learned");
  if (p.learn_c && !(*p.c < 0.5))
    throw UserError("config", where + ".c: must lie in (0, 0.5) when learned");
  return p;
}

json hierarchy_json(const TripleGammaPrior& p, const char* b2key) {
  const bool theta = std::string(b2key) == "kappa_B2";
  json j = {{"kind", "triple_gamma"}, {"alias", p.alias}, {"a", p.a},
            {"c", p.finite_c() ? json(*p.c) : json("inf")}, {b2key, p.B2},
            {"learn_a", p.learn_a}, {"learn_c", p.learn_c}, {"learn_phi", p.learn_phi},
            {theta ? "learn_kappa" : "learn_lambda", p.learn_B2},
            {"alpha_a", p.alpha_a}, {"beta_a", p.beta_a}, {"alpha_c", p.alpha_c},
            {"beta_c", p.beta_c}, {"d1", p.d1}, {"d2", p.d2}};
  // with phi learned the global scale is carried as the initial phi
  if (p.learn_phi) {
    j.erase(b2key);
    j["phi"] = p.phi();
  }
  return j;
}

}  // namespace

TripleGammaPrior make_lasso(double B2) {
  TripleGammaPrior p;
  p.alias = "lasso";
  p.a = 1.0;
  p.c.reset();
  p.B2 = B2;
  return p;
}

TripleGammaPrior make_double_gamma(double a, double B2) {
  TripleGammaPrior p;
  p.alias = "double_gamma";
  p.a = a;
  p.c.reset();
  p.B2 = B2;
  return p;
}

TripleGammaPrior make_horseshoe() {
  TripleGammaPrior p;
  p.alias = "horseshoe";
  p.a = 0.5;
  p.c = 0.5;
  p.B2 = 2.0;  // phi = 1
  p.learn_phi = true;
  return p;
}

TripleGammaPrior make_triple_gamma(double a, double c, double B2) {
  TripleGammaPrior p;
  p.a = a;
  p.c = c;
  p.B2 = B2;
  return p;
}

ThetaPrior theta_prior_from_json(const json& j) {
  const std::string where = "prior.theta";
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw UserError("config", where + ".kind: required string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "inverse_gamma") {
    check_keys(j, {"kind", "s0", "S0"}, where);
    return InverseGammaPrior{get_pos(j, "s0", 0.001, where), get_pos(j, "S0", 0.001, where)};
  }
  if (kind == "ridge") {
    check_keys(j, {"kind", "tau", "gamma_rate", "scale_by_sigma2"}, where);
    if (j.contains("tau") && j.contains("gamma_rate"))
      throw UserError("config", where + ": give either tau or gamma_rate");
    RidgePrior r;
    r.tau = get_pos(j, "tau", 0.05, where);
    // theta ~ G(1/2, rate) <=> tau = 1 / (2 rate)
    if (j.contains("gamma_rate")) r.tau = 1.0 / (2.0 * get_pos(j, "gamma_rate", 10, where));
    r.scale_by_sigma2 = get_bool(j, "scale_by_sigma2", false, where);
    return r;
  }
  if (kind == "lasso" || kind == "double_gamma" || kind == "horseshoe" || kind == "triple_gamma")
    return parse_hierarchy(j, kind, "kappa_B2", false, where);
  if (kind == "spike_slab") {
    check_keys(j, {"kind", "slab", "tau", "b", "a_tau", "a_xi", "a_lambda", "a_kappa", "pi",
                   "pi_delta", "pi_gamma", "a0_delta", "b0_delta", "a0_gamma", "b0_gamma", "B_delta",
                   "B_gamma", "enumeration_cap", "step", "learn_b"},
               where);
    SpikeSlabPrior s;
    const std::string slab = j.value("slab", std::string("student_t"));
    if (slab == "gaussian")
      s.slab = SlabKind::Gaussian;
    else if (slab == "fractional")
      s.slab = SlabKind::Fractional;
    else if (slab == "student_t")
      s.slab = SlabKind::StudentT;
    else
      throw UserError("config", where + ".slab: expected gaussian | fractional | student_t");
    if (j.contains("learn_b")) throw UserError("config", where + ".learn_b: the fractional b cannot be learned");
    if (j.contains("b") && s.slab != SlabKind::Fractional)
      throw UserError("config", where + ".b: only valid for the fractional slab");
    if (j.contains("tau") && s.slab != SlabKind::Gaussian)
      throw UserError("config", where + ".tau: only valid for the gaussian slab");
    s.tau = get_pos(j, "tau", 1.0, where);
    s.b = get_pos(j, "b", 1e-4, where);
    if (!(s.b < 1)) throw UserError("config", where + ".b: must lie in (0, 1)");
    s.a_tau = get_pos(j, "a_tau", 0.5, where);
    s.a_xi = get_pos(j, "a_xi", 0.5, where);
    s.a_lambda = get_pos(j, "a_lambda", 0.5, where);
    s.a_kappa = get_pos(j, "a_kappa", 0.5, where);
    const std::string pi = j.value("pi", std::string("beta"));
    if (pi != "beta" && pi != "fixed") throw UserError("config", where + ".pi: expected beta | fixed");
    s.pi_hierarchical = pi == "beta";
    s.pi_delta = get_pos(j, "pi_delta", 0.5, where);
    s.pi_gamma = get_pos(j, "pi_gamma", 0.5, where);
    if (!(s.pi_delta < 1) || !(s.pi_gamma < 1))
      throw UserError("config", where + ": fixed inclusion probabilities must lie in (0, 1)");
    s.a0_delta = get_pos(j, "a0_delta", 1, where);
    s.b0_delta = get_pos(j, "b0_delta", 1, where);
    s.a0_gamma = get_pos(j, "a0_gamma", 1, where);
    s.b0_gamma = get_pos(j, "b0_gamma", 2, where);
    s.B_delta = get_pos(j, "B_delta", 1, where);
    s.B_gamma = get_pos(j, "B_gamma", 1, where);
    if (j.contains("enumeration_cap")) {
      if (!j["enumeration_cap"].is_number_integer() || j["enumeration_cap"].get<int>() < 1 ||
          j["enumeration_cap"].get<int>() > 14)
        throw UserError("config", where + ".enumeration_cap: integer in 1..14");
      s.enumeration_cap = j["enumeration_cap"].get<int>();
    }
    s.step = j.value("step", std::string("auto"));
    if (s.step != "auto" && s.step != "enumerate" && s.step != "single_move")
      throw UserError("config", where + ".step: expected auto | enumerate | single_move");
    return s;
  }
  throw UserError("config", where + ".kind: unknown prior '" + kind + "'");
}

BetaPrior beta_prior_from_json(const json& j) {
  const std::string where = "prior.beta";
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw UserError("config", where + ".kind: required string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "normal" || kind == "ridge") {
    check_keys(j, {"kind", "tau", "scale_by_sigma2"}, where);
    return NormalBetaPrior{get_pos(j, "tau", 10.0, where), get_bool(j, "scale_by_sigma2", false, where)};
  }
  if (kind == "lasso" || kind == "double_gamma" || kind == "horseshoe" || kind == "triple_gamma")
    return parse_hierarchy(j, kind, "lambda_B2", kind == "triple_gamma", where);
  throw UserError("config", where + ".kind: unknown prior '" + kind + "'");
}

SigmaPrior sigma_prior_from_json(const json& j) {
  const std::string where = "prior.sigma";
  SigmaPrior s;
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw UserError("config", where + ".kind: required string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "inverse_gamma") {
    check_keys(j, {"kind", "c0", "C0", "hierarchical", "g0", "g1"}, where);
    s.c0 = get_pos(j, "c0", 0.5, where);
    s.C0 = get_pos(j, "C0", 1.0, where);
    s.hierarchical_C0 = get_bool(j, "hierarchical", false, where);
    s.g0 = get_pos(j, "g0", 5, where);
    s.g1 = get_pos(j, "g1", 10.0 / 3.0, where);
    if (s.hierarchical_C0 && j.contains("C0"))
      throw UserError("config", where + ".C0: learned under the hierarchical prior; give g0/g1");
    if (s.hierarchical_C0) s.C0 = s.g0 / s.g1;
  } else if (kind == "sv") {
    check_keys(j, {"kind", "mu_mean", "mu_var", "phi_a", "phi_b", "sigma_eta_B", "offset"}, where);
    s.sv = true;
    if (j.contains("mu_mean")) {
      if (!j["mu_mean"].is_number()) throw UserError("config", where + ".mu_mean: expected a number");
      s.svp.mu_mean = j["mu_mean"].get<double>();
    }
    s.svp.mu_var = get_pos(j, "mu_var", 100, where);
    s.svp.phi_a = get_pos(j, "phi_a", 5, where);
    s.svp.phi_b = get_pos(j, "phi_b", 1.5, where);
    s.svp.sigma_eta_B = get_pos(j, "sigma_eta_B", 1, where);
    s.svp.offset = get_pos(j, "offset", 1e-8, where);
  } else {
    throw UserError("config", where + ".kind: expected inverse_gamma | sv");
  }
  return s;
}

PriorConfig prior_from_json(const json& j) {
  check_keys(j, {"theta", "beta", "sigma"}, "prior");
  PriorConfig cfg;
  cfg.theta = j.contains("theta") ? theta_prior_from_json(j["theta"]) : ThetaPrior(RidgePrior{});
  if (cfg.is_spike_slab()) {
    if (j.contains("beta"))
      throw UserError("config", "prior.beta: the spike-and-slab prior covers beta; remove prior.beta");
    cfg.beta = NormalBetaPrior{};
  } else {
    cfg.beta = j.contains("beta") ? beta_prior_from_json(j["beta"]) : BetaPrior(NormalBetaPrior{});
  }
  cfg.sigma = j.contains("sigma") ? sigma_prior_from_json(j["sigma"]) : SigmaPrior{};
  if (cfg.sigma.sv) {
    if (auto* r = std::get_if<RidgePrior>(&cfg.theta); r && r->scale_by_sigma2)
      throw UserError("config", "prior.theta.scale_by_sigma2: incompatible with stochastic volatility");
    if (auto* b = std::get_if<NormalBetaPrior>(&cfg.beta); b && b->scale_by_sigma2)
      throw UserError("config", "prior.beta.scale_by_sigma2: incompatible with stochastic volatility");
    if (cfg.is_spike_slab())
      throw UserError("config", "prior.sigma: spike-and-slab requires the inverse gamma sigma prior");
  }
  return cfg;
}

json to_json(const ThetaPrior& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, InverseGammaPrior>) {
          return {{"kind", "inverse_gamma"}, {"s0", v.s0}, {"S0", v.S0}};
        } else if constexpr (std::is_same_v<T, RidgePrior>) {
          return {{"kind", "ridge"}, {"tau", v.tau}, {"scale_by_sigma2", v.scale_by_sigma2}};
        } else if constexpr (std::is_same_v<T, TripleGammaPrior>) {
          return hierarchy_json(v, "kappa_B2");
        } else {
          const char* slab = v.slab == SlabKind::Gaussian     ? "gaussian"
                             : v.slab == SlabKind::Fractional ? "fractional"
                                                              : "student_t";
          json j = {{"kind", "spike_slab"}, {"slab", slab}, {"pi", v.pi_hierarchical ? "beta" : "fixed"},
                  {"pi_delta", v.pi_delta}, {"pi_gamma", v.pi_gamma}, {"a0_delta", v.a0_delta},
                  {"b0_delta", v.b0_delta}, {"a0_gamma", v.a0_gamma}, {"b0_gamma", v.b0_gamma},
                  {"B_delta", v.B_delta}, {"B_gamma", v.B_gamma},
                  {"enumeration_cap", v.enumeration_cap}, {"step", v.step}};
          // slab-specific fields only, so that the output parses back
          if (v.slab == SlabKind::Gaussian) j["tau"] = v.tau;
          if (v.slab == SlabKind::Fractional) j["b"] = v.b;
          if (v.slab == SlabKind::StudentT) {
            j["a_tau"] = v.a_tau;
            j["a_xi"] = v.a_xi;
            j["a_lambda"] = v.a_lambda;
            j["a_kappa"] = v.a_kappa;
          }
          return j;
        }
      },
      p);
}

json to_json(const BetaPrior& p) {
  if (auto* n = std::get_if<NormalBetaPrior>(&p))
    return {{"kind", "normal"}, {"tau", n->tau}, {"scale_by_sigma2", n->scale_by_sigma2}};
  return hierarchy_json(std::get<TripleGammaPrior>(p), "lambda_B2");
}

json to_json(const SigmaPrior& s) {
  if (s.sv)
    return {{"kind", "sv"}, {"mu_mean", s.svp.mu_mean}, {"mu_var", s.svp.mu_var},
            {"phi_a", s.svp.phi_a}, {"phi_b", s.svp.phi_b}, {"sigma_eta_B", s.svp.sigma_eta_B},
            {"offset", s.svp.offset}};
  if (s.hierarchical_C0)
    return {{"kind", "inverse_gamma"}, {"c0", s.c0}, {"hierarchical", true}, {"g0", s.g0}, {"g1", s.g1}};
  return {{"kind", "inverse_gamma"}, {"c0", s.c0}, {"C0", s.C0}, {"hierarchical", false}};
}

json to_json(const PriorConfig& p) {
  json j = {{"theta", to_json(p.theta)}, {"sigma", to_json(p.sigma)}};
  if (!p.is_spike_slab()) j["beta"] = to_json(p.beta);
  return j;
}

std::string describe(const ThetaPrior& p) {
  if (std::holds_alternative<InverseGammaPrior>(p)) return "inverse_gamma";
  if (std::holds_alternative<RidgePrior>(p)) return "ridge";
  if (auto* t = std::get_if<TripleGammaPrior>(&p)) return t->alias;
  return "spike_slab";
}

ScaleState initial_scale_state(const TripleGammaPrior& p, int dim) {
  ScaleState s;
  s.a = p.a;
  s.finite_c = p.finite_c();
  s.c = p.finite_c() ? *p.c : 0.0;
  s.B2 = p.B2;
  s.psi = VectorXd::Constant(dim, p.tau());  // prior mean of psi_j is 2/B2
  if (s.finite_c) s.kappa2 = VectorXd::Constant(dim, p.B2);
  return s;
}

double log_hyperprior_density(const TripleGammaPrior& prior, const ScaleState& s) {
  double lp = 0;
  // Beta on 2a (resp. 2c): density of a itself carries the factor 2.
  if (prior.learn_a) lp += std::log(2.0) + log_beta_density(2 * s.a, prior.alpha_a, prior.beta_a);
  if (prior.learn_c) lp += std::log(2.0) + log_beta_density(2 * s.c, prior.alpha_c, prior.beta_c);
  if (prior.learn_phi) lp += log_beta_prime_density(s.phi(), s.c, s.a);
  if (prior.learn_B2) lp += log_gamma_density(s.B2, prior.d1, prior.d2);
  return lp;
}

double log_hierarchy_density(const TripleGammaPrior& prior, const ScaleState& s, const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  if (s.psi.size() != n || (s.finite_c && s.kappa2.size() != n))
    throw UserError("prior", "scale dimension mismatch");
  double lp = 0;
  for (int j = 0; j < n; ++j) {
    if (!(s.psi[j] > 0)) return kNegInf;
    lp += -0.5 * (std::log(2 * M_PI * s.psi[j]) + x[j] * x[j] / s.psi[j]);
    lp += log_gamma_density(s.psi[j], s.a, s.rate(j));
    if (s.finite_c) lp += log_gamma_density(s.kappa2[j], s.c, s.c / s.B2);
  }
  return lp + log_hyperprior_density(prior, s);
}

double log_ridge_density(const RidgePrior& prior, const VectorXd& sqrt_theta, double sigma2) {
  const double v = prior.tau * (prior.scale_by_sigma2 ? sigma2 : 1.0);
  double lp = 0;
  for (int j = 0; j < sqrt_theta.size(); ++j)
    lp += -0.5 * (std::log(2 * M_PI * v) + sqrt_theta[j] * sqrt_theta[j] / v);
  return lp;
}

double log_inverse_gamma_theta_density(const InverseGammaPrior& prior, const VectorXd& theta) {
  double lp = 0;
  for (int j = 0; j < theta.size(); ++j) lp += log_inv_gamma_density(theta[j], prior.s0, prior.S0);
  return lp;
}

double log_prior_density(const PriorConfig& cfg, const PriorPoint& pt) {
  double lp = 0;
  if (auto* r = std::get_if<RidgePrior>(&cfg.theta)) {
    lp += log_ridge_density(*r, pt.sqrt_theta, pt.sigma2);
  } else if (auto* ig = std::get_if<InverseGammaPrior>(&cfg.theta)) {
    lp += log_inverse_gamma_theta_density(*ig, pt.sqrt_theta.array().square().matrix());
  } else if (auto* tg = std::get_if<TripleGammaPrior>(&cfg.theta)) {
    if (!pt.theta_scales) throw UserError("prior", "triple gamma density needs theta scales");
    lp += log_hierarchy_density(*tg, *pt.theta_scales, pt.sqrt_theta);
  } else {
    throw UserError("prior", "spike-and-slab densities are evaluated per model");
  }
  if (auto* nb = std::get_if<NormalBetaPrior>(&cfg.beta)) {
    const double v = nb->tau * (nb->scale_by_sigma2 ? pt.sigma2 : 1.0);
    for (int j = 0; j < pt.beta.size(); ++j)
      lp += -0.5 * (std::log(2 * M_PI * v) + pt.beta[j] * pt.beta[j] / v);
  } else {
    if (!pt.beta_scales) throw UserError("prior", "triple gamma density needs beta scales");
    lp += log_hierarchy_density(std::get<TripleGammaPrior>(cfg.beta), *pt.beta_scales, pt.beta);
  }
  return lp;
}

// Very diffuse hyperpriors (e.g. Gamma(0.001, 0.001)) put real mass beyond double range;
// such draws are pinned to the nearest representable scale.
static double representable(double x) { return std::clamp(x, 1e-300, 1e300); }

HierarchyDraw sample_shrinkage_hierarchy(Rng& rng, const TripleGammaPrior& prior, int n) {
  HierarchyDraw d;
  ScaleState& s = d.scales;
  s.a = prior.learn_a ? 0.5 * rng.beta(prior.alpha_a, prior.beta_a) : prior.a;
  s.finite_c = prior.finite_c();
  s.c = s.finite_c ? (prior.learn_c ? 0.5 * rng.beta(prior.alpha_c, prior.beta_c) : *prior.c) : 0.0;
  s.B2 = prior.B2;
  if (prior.learn_B2) s.B2 = representable(rng.gamma(prior.d1, prior.d2));
  if (prior.learn_phi) s.B2 = representable(2 * s.c / (s.a * sample_beta_prime(rng, s.c, s.a)));
  s.psi.resize(n);
  d.x.resize(n);
  if (s.finite_c) s.kappa2.resize(n);
  const bool lasso_path = prior.alias == "lasso" && !prior.learn_a;
  for (int j = 0; j < n; ++j) {
    if (lasso_path) {
      // sqrt_theta | psi ~ N(0, tau psi), psi ~ Exp(1)
      s.psi[j] = representable((2.0 / s.B2) * rng.exponential(1.0));
    } else {
      if (s.finite_c) s.kappa2[j] = representable(rng.gamma(s.c, s.c / s.B2));
      s.psi[j] = representable(rng.gamma(s.a, s.rate(j)));
    }
    d.x[j] = std::sqrt(s.psi[j]) * rng.normal();
  }
  return d;
}

VectorXd sample_ridge(Rng& rng, const RidgePrior& prior, int n, double sigma2) {
  const double sd = std::sqrt(prior.tau * (prior.scale_by_sigma2 ? sigma2 : 1.0));
  VectorXd x(n);
  for (int j = 0; j < n; ++j) x[j] = sd * rng.normal();
  return x;
}

double log_indicator_prior_fixed(const std::vector<int>& code, double pi_delta, double pi_gamma) {
  double lp = 0;
  for (int c : code) {
    switch (c) {
      case 0: lp += std::log1p(-pi_delta) + std::log1p(-pi_gamma); break;
      case 1: lp += std::log(pi_delta) + std::log1p(-pi_gamma); break;
      case 2: lp += std::log(pi_gamma); break;
      default: throw UserError("indicators", "indicator code must be 0, 1 or 2");
    }
  }
  return lp;
}

double log_indicator_prior_integrated(const std::vector<int>& code, const SpikeSlabPrior& ss) {
  int pd = 0, pf = 0, p0 = 0;
  for (int c : code) {
    if (c == 2) ++pd;
    else if (c == 1) ++pf;
    else if (c == 0) ++p0;
    else throw UserError("indicators", "indicator code must be 0, 1 or 2");
  }
  const int p = static_cast<int>(code.size());
  return log_beta_fn(ss.a0_gamma + pd, ss.b0_gamma + p - pd) - log_beta_fn(ss.a0_gamma, ss.b0_gamma) +
         log_beta_fn(ss.a0_delta + pf, ss.b0_delta + p0) - log_beta_fn(ss.a0_delta, ss.b0_delta);
}

}  // namespace tvp
