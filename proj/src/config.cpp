#include "tvp/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace tvp {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UserError("config", where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw UserError("config", where + ": unknown key '" + it.key() + "'");
}

int get_int(const json& j, const char* key, int def, int lo, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer()) throw UserError("config", where + "." + key + ": expected an integer");
  const int v = j[key].get<int>();
  if (v < lo) throw UserError("config", where + "." + key + ": must be >= " + std::to_string(lo));
  return v;
}

bool get_bool(const json& j, const char* key, bool def, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) throw UserError("config", where + "." + key + ": expected true/false");
  return j[key].get<bool>();
}

double get_num(const json& j, const char* key, double def, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw UserError("config", where + "." + key + ": expected a number");
  return j[key].get<double>();
}

std::string get_str(const json& j, const char* key, const std::string& def, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string()) throw UserError("config", where + "." + key + ": expected a string");
  return j[key].get<std::string>();
}

std::vector<std::string> get_strs(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  if (!j[key].is_array()) throw UserError("config", where + "." + key + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j[key]) {
    if (!e.is_string()) throw UserError("config", where + "." + key + ": expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

VectorXd get_vec(const json& j, const char* key, const std::string& where) {
  if (!j[key].is_array()) throw UserError("config", where + "." + key + ": expected an array of numbers");
  VectorXd v(j[key].size());
  for (size_t i = 0; i < j[key].size(); ++i) {
    if (!j[key][i].is_number()) throw UserError("config", where + "." + key + ": expected numbers");
    v[i] = j[key][i].get<double>();
  }
  return v;
}

std::uint64_t get_seed(const json& j, const char* key, const std::string& where) {
  if (!j[key].is_number_integer() || (j[key].is_number_integer() && !j[key].is_number_unsigned() && j[key].get<long long>() < 0))
    throw UserError("config", where + "." + key + ": expected a nonnegative integer");
  return j[key].get<std::uint64_t>();
}

SimulationSpec simulation_from_json(const json& j, std::uint64_t default_seed) {
  const std::string w = "data.simulate";
  check_keys(j, {"T", "beta", "theta", "sigma2", "sv", "intercept", "seed"}, w);
  SimulationSpec s;
  s.T = get_int(j, "T", 200, 2, w);
  if (j.contains("beta")) s.beta = get_vec(j, "beta", w);
  if (j.contains("theta")) s.theta = get_vec(j, "theta", w);
  s.sigma2 = get_num(j, "sigma2", 1.0, w);
  s.intercept = get_bool(j, "intercept", true, w);
  s.seed = j.contains("seed") ? get_seed(j, "seed", w) : default_seed;
  if (j.contains("sv")) {
    const json& v = j["sv"];
    check_keys(v, {"mu", "phi", "sigma2_eta"}, w + ".sv");
    s.sv = true;
    s.sv_mu = get_num(v, "mu", 0.0, w + ".sv");
    s.sv_phi = get_num(v, "phi", 0.95, w + ".sv");
    s.sv_sigma2_eta = get_num(v, "sigma2_eta", 0.05, w + ".sv");
  }
  try {
    s.validate();
  } catch (const UserError& e) {
    throw UserError("config", w + ": " + e.what());
  }
  return s;
}

json simulation_json(const SimulationSpec& s) {
  json j = {{"T", s.T},
            {"beta", std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size())},
            {"theta", std::vector<double>(s.theta.data(), s.theta.data() + s.theta.size())},
            {"intercept", s.intercept},
            {"seed", s.seed}};
  if (s.sv)
    j["sv"] = {{"mu", s.sv_mu}, {"phi", s.sv_phi}, {"sigma2_eta", s.sv_sigma2_eta}};
  else
    j["sigma2"] = s.sigma2;
  return j;
}

}  // namespace

SamplerOptions sampler_options_from_json(const json& j) {
  const std::string w = "sampler";
  check_keys(j, {"path", "asis", "keep_sign", "prior_only", "static_theta", "target_accept", "store_paths",
                 "init_model"},
             w);
  SamplerOptions o;
  o.store_paths = true;
  const std::string path = get_str(j, "path", "awol", w);
  if (path == "awol")
    o.path = PathSampler::AWOL;
  else if (path == "ffbs")
    o.path = PathSampler::FFBS;
  else
    throw UserError("config", w + ".path: expected awol | ffbs");
  if (j.contains("asis")) {
    if (j["asis"].is_boolean())
      o.asis = j["asis"].get<bool>() ? 1 : 0;
    else if (j["asis"] == "auto")
      o.asis = -1;
    else
      throw UserError("config", w + ".asis: expected true | false | \"auto\"");
  }
  o.keep_sign = get_bool(j, "keep_sign", false, w);
  o.prior_only = get_bool(j, "prior_only", false, w);
  o.static_theta = get_bool(j, "static_theta", false, w);
  o.target_accept = get_num(j, "target_accept", 0.35, w);
  if (!(o.target_accept > 0 && o.target_accept < 1))
    throw UserError("config", w + ".target_accept: must lie in (0, 1)");
  o.store_paths = get_bool(j, "store_paths", true, w);
  o.init_model = get_str(j, "init_model", "full", w);
  if (o.init_model != "full" && o.init_model != "static")
    throw UserError("config", w + ".init_model: expected full | static");
  return o;
}

json to_json(const SamplerOptions& o) {
  return {{"path", o.path == PathSampler::AWOL ? "awol" : "ffbs"},
          {"asis", o.asis < 0 ? json("auto") : json(o.asis == 1)},
          {"keep_sign", o.keep_sign},
          {"prior_only", o.prior_only},
          {"static_theta", o.static_theta},
          {"target_accept", o.target_accept},
          {"store_paths", o.store_paths},
          {"init_model", o.init_model}};
}

RunConfig config_from_json(const json& j, const std::string& base_dir) {
  check_keys(j, {"seed", "data", "model", "prior", "equation_priors", "sampler", "chain", "evaluation",
                 "classification", "output"},
             "config");
  RunConfig c;
  if (!j.contains("seed")) throw UserError("config", "config.seed: required");
  c.seed = get_seed(j, "seed", "config");
  json norm;
  norm["seed"] = c.seed;

  // data
  if (!j.contains("data")) throw UserError("config", "config.data: required");
  const json& d = j["data"];
  check_keys(d, {"csv", "y", "x", "intercept", "columns", "transform", "simulate"}, "data");
  json nd;
  if (d.contains("simulate")) {
    if (d.contains("csv")) throw UserError("config", "data: give either csv or simulate, not both");
    c.data.simulate = simulation_from_json(d["simulate"], c.seed);
    nd["simulate"] = simulation_json(*c.data.simulate);
  } else {
    if (!d.contains("csv")) throw UserError("config", "data.csv: required unless data.simulate is given");
    const std::string csv = get_str(d, "csv", "", "data");
    nd["csv"] = csv;
    const std::filesystem::path p(csv);
    c.data.csv = p.is_absolute() ? csv : (std::filesystem::path(base_dir) / p).string();
    c.data.mapping.y = get_str(d, "y", "", "data");
    c.data.mapping.x = get_strs(d, "x", "data");
    c.data.mapping.intercept = get_bool(d, "intercept", true, "data");
    c.data.columns = get_strs(d, "columns", "data");
    if (d.contains("transform")) {
      if (!d["transform"].is_object()) throw UserError("config", "data.transform: expected {column: code}");
      for (auto it = d["transform"].begin(); it != d["transform"].end(); ++it) {
        if (!it->is_number_integer()) throw UserError("config", "data.transform." + it.key() + ": expected 1..4");
        const int code = it->get<int>();
        if (code < 1 || code > 4) throw UserError("config", "data.transform." + it.key() + ": expected 1..4");
        c.data.mapping.transform[it.key()] = code;
      }
    }
    nd["y"] = c.data.mapping.y;
    nd["x"] = c.data.mapping.x;
    nd["intercept"] = c.data.mapping.intercept;
    nd["columns"] = c.data.columns;
    nd["transform"] = c.data.mapping.transform;
  }
  norm["data"] = nd;

  // model
  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, {"type", "lag"}, "model");
    c.model = get_str(m, "type", "univariate", "model");
    c.lag = get_int(m, "lag", 1, 1, "model");
  }
  if (c.model != "univariate" && c.model != "cholesky_sv" && c.model != "tvp_var")
    throw UserError("config", "model.type: expected univariate | cholesky_sv | tvp_var");
  if (c.model != "univariate" && c.data.simulate)
    throw UserError("config", "data.simulate: only univariate simulation is available in the config");
  if (c.model != "univariate" && c.data.columns.size() < 2)
    throw UserError("config", "data.columns: a multivariate model needs at least two response columns");
  if (c.model == "univariate" && !c.data.simulate && c.data.mapping.y.empty())
    throw UserError("config", "data.y: required for a univariate model");
  norm["model"] = {{"type", c.model}, {"lag", c.lag}};

  c.spec.prior = prior_from_json(j.value("prior", json::object()));
  norm["prior"] = to_json(c.spec.prior);
  if (j.contains("equation_priors")) {
    if (!j["equation_priors"].is_array()) throw UserError("config", "equation_priors: expected an array");
    json arr = json::array();
    for (const auto& e : j["equation_priors"]) {
      c.equation_priors.push_back(prior_from_json(e));
      arr.push_back(to_json(c.equation_priors.back()));
    }
    norm["equation_priors"] = arr;
  }
  c.spec.opt = sampler_options_from_json(j.value("sampler", json::object()));
  norm["sampler"] = to_json(c.spec.opt);

  if (j.contains("chain")) {
    const json& ch = j["chain"];
    check_keys(ch, {"burn", "draws", "thin", "chains"}, "chain");
    c.n_burn = get_int(ch, "burn", 1000, 0, "chain");
    c.n_draws = get_int(ch, "draws", 1000, 1, "chain");
    c.thin = get_int(ch, "thin", 1, 1, "chain");
    c.chains = get_int(ch, "chains", 1, 1, "chain");
  }
  norm["chain"] = {{"burn", c.n_burn}, {"draws", c.n_draws}, {"thin", c.thin}, {"chains", c.chains}};

  if (j.contains("evaluation")) {
    const json& e = j["evaluation"];
    check_keys(e, {"t0", "priors", "burn", "draws", "thin"}, "evaluation");
    EvaluationConfig ev;
    ev.t0 = get_int(e, "t0", 0, 2, "evaluation");
    if (!e.contains("t0")) throw UserError("config", "evaluation.t0: required");
    ev.n_burn = get_int(e, "burn", 500, 0, "evaluation");
    ev.n_draws = get_int(e, "draws", 500, 1, "evaluation");
    ev.thin = get_int(e, "thin", 1, 1, "evaluation");
    json np = json::array();
    if (e.contains("priors")) {
      if (!e["priors"].is_array()) throw UserError("config", "evaluation.priors: expected an array");
      for (const auto& pe : e["priors"]) {
        check_keys(pe, {"name", "prior"}, "evaluation.priors[]");
        const std::string name = get_str(pe, "name", "", "evaluation.priors[]");
        if (name.empty()) throw UserError("config", "evaluation.priors[].name: required");
        for (const auto& [n, _] : ev.priors)
          if (n == name) throw UserError("config", "evaluation.priors: duplicate name '" + name + "'");
        ev.priors.emplace_back(name, prior_from_json(pe.value("prior", json::object())));
        np.push_back({{"name", name}, {"prior", to_json(ev.priors.back().second)}});
      }
    }
    if (ev.priors.empty()) {
      ev.priors.emplace_back("model", c.spec.prior);
      np.push_back({{"name", "model"}, {"prior", to_json(c.spec.prior)}});
    }
    norm["evaluation"] = {{"t0", ev.t0}, {"priors", np}, {"burn", ev.n_burn}, {"draws", ev.n_draws},
                          {"thin", ev.thin}};
    c.evaluation = ev;
  }
  if (j.contains("classification")) {
    check_keys(j["classification"], {"threshold"}, "classification");
    c.threshold = get_num(j["classification"], "threshold", 0.5, "classification");
    if (!(c.threshold > 0 && c.threshold < 1)) throw UserError("config", "classification.threshold: must lie in (0, 1)");
  }
  norm["classification"] = {{"threshold", c.threshold}};
  c.output = get_str(j, "output", "out", "config");
  c.normalized = norm;
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("config", "cannot open config file " + path);
  json j;
  try {
    j = json::parse(f, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw UserError("config", path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return config_from_json(j, dir.empty() ? "." : dir.string());
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& c) { return fnv1a_hex(c.normalized.dump()); }

std::vector<ModelSpec> equation_specs(const RunConfig& c, int q) {
  if (c.equation_priors.empty()) return {c.spec};
  if (static_cast<int>(c.equation_priors.size()) != q)
    throw UserError("config", "equation_priors: need one prior per equation (" + std::to_string(q) + ")");
  std::vector<ModelSpec> out;
  for (const auto& p : c.equation_priors) out.push_back({p, c.spec.opt});
  return out;
}

}  // namespace tvp
