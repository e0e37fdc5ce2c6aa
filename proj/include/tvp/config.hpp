#pragma once
// Run configuration: a JSON key tree validated against a fixed schema (unknown keys rejected).
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tvp/io.hpp"
#include "tvp/sampler.hpp"

namespace tvp {

struct DataSource {
  std::string csv;  // path, or empty when simulating
  ColumnMapping mapping;             // univariate
  std::vector<std::string> columns;  // multivariate response columns (ordering matters)
  std::optional<SimulationSpec> simulate;
};

struct EvaluationConfig {
  int t0 = 0;
  std::vector<std::pair<std::string, PriorConfig>> priors;  // compared priors, in order
  int n_burn = 500, n_draws = 500, thin = 1;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataSource data;
  std::string model = "univariate";  // univariate | cholesky_sv | tvp_var
  int lag = 1;
  ModelSpec spec;
  std::vector<PriorConfig> equation_priors;  // optional per-row priors (multivariate)
  int n_burn = 1000, n_draws = 1000, thin = 1, chains = 1;
  std::optional<EvaluationConfig> evaluation;
  double threshold = 0.5;
  std::string output = "out";
  nlohmann::json normalized;  // canonical form (hash input)
};

RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
SamplerOptions sampler_options_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SamplerOptions& o);

// 64-bit FNV-1a of the canonical JSON text, hex encoded.
std::string fnv1a_hex(const std::string& s);
std::string config_hash(const RunConfig& c);

std::vector<ModelSpec> equation_specs(const RunConfig& c, int q);

}  // namespace tvp
