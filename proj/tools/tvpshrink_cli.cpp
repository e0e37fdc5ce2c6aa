// tvpshrink command-line interface.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "tvp/config.hpp"
#include "tvp/evaluation.hpp"
#include "tvp/io.hpp"
#include "tvp/multivariate.hpp"
#include "tvp/sampler.hpp"
#include "tvp/special.hpp"

using namespace tvp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  int threads = 1;
  bool quiet = false;
};

Common g;

void log_kv(const std::string& event, const std::vector<std::pair<std::string, std::string>>& kv = {}) {
  if (g.quiet) return;
  std::ostringstream os;
  os << "level=info event=" << event;
  for (const auto& [k, v] : kv) os << ' ' << k << '=' << v;
  std::cerr << os.str() << '\n';
}

RunConfig load_run_config() {
  if (g.config.empty()) throw UserError("cli", "--config is required for this command");
  RunConfig c = load_config(g.config);
  if (g.seed >= 0) {
    c.seed = static_cast<std::uint64_t>(g.seed);
    c.normalized["seed"] = c.seed;
    if (c.data.simulate && !c.normalized["data"]["simulate"].is_null()) {
      // explicit simulate.seed stays; otherwise the override follows the master seed
    }
  }
  if (!g.out.empty()) c.output = g.out;
  return c;
}

std::string out_dir(const RunConfig& c) {
  fs::create_directories(c.output);
  return c.output;
}

std::string preamble(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

TimeSeriesData univariate_data(const RunConfig& c, json& info) {
  if (c.data.simulate) {
    const SimulatedTVP s = simulate_tvp(*c.data.simulate);
    info = {{"source", "simulate"}, {"T", s.data.T()}, {"p", s.data.p()}};
    return s.data;
  }
  const LoadedData L = load_csv(c.data.csv, c.data.mapping);
  info = {{"source", "csv"}, {"T", L.data.T()}, {"p", L.data.p()}, {"dropped_rows", L.dropped_rows},
          {"transforms", L.transforms}};
  return L.data;
}

MultiTimeSeries multi_data(const RunConfig& c, json& info) {
  const LoadedMulti L = load_csv_multi(c.data.csv, c.data.columns, c.data.mapping.transform);
  info = {{"source", "csv"}, {"T", L.data.T()}, {"q", L.data.q()}, {"order", L.data.names},
          {"dropped_rows", L.dropped_rows}, {"transforms", L.transforms}};
  return L.data;
}

ChainControl chain_control(const RunConfig& c) {
  ChainControl ctl;
  ctl.n_burn = c.n_burn;
  ctl.n_draws = c.n_draws;
  ctl.thin = c.thin;
  ctl.seed = c.seed;
  return ctl;
}

std::optional<ClassificationTable> classify_store(const DrawsStore& d, double threshold) {
  if (!d.codes.empty()) return classify_from_indicators(d.codes, d.labels);
  if (d.has("psi_theta[1]")) return classify_by_threshold(d, threshold);
  return std::nullopt;
}

json sigma_spd_check(const SystemFit& fit, int T) {
  long total = 0, spd = 0;
  for (int t = 1; t <= T; ++t)
    for (const MatrixXd& S : sigma_t_draws(fit, t)) {
      ++total;
      Eigen::LLT<MatrixXd> llt(S);
      spd += llt.info() == Eigen::Success;
    }
  return {{"draws_checked", total}, {"spd", spd}};
}

int cmd_fit() {
  RunConfig c = load_run_config();
  const std::string hash = config_hash(c);
  const std::string dir = out_dir(c);
  log_kv("fit_start", {{"config_hash", hash}, {"seed", std::to_string(c.seed)}, {"model", c.model}});
  json info;
  json summary;
  ChainControl ctl = chain_control(c);
  if (c.model == "univariate") {
    const TimeSeriesData data = univariate_data(c, info);
    std::vector<DrawsStore> chains = run_chains(data, c.spec, ctl, c.chains, g.threads);
    for (size_t k = 0; k < chains.size(); ++k) {
      chains[k].config_hash = hash;
      write_draws(dir + "/draws/chain" + std::to_string(k + 1), chains[k]);
    }
    summary = summarize_draws(chains);
    // pool indicator/threshold classification over chains
    DrawsStore pooled = chains[0];
    for (size_t k = 1; k < chains.size(); ++k) {
      for (size_t i = 0; i < pooled.columns.size(); ++i)
        pooled.columns[i].insert(pooled.columns[i].end(), chains[k].columns[i].begin(), chains[k].columns[i].end());
      pooled.codes.insert(pooled.codes.end(), chains[k].codes.begin(), chains[k].codes.end());
    }
    if (auto tab = classify_store(pooled, c.threshold))
      write_text_file(dir + "/classification.csv", preamble(hash, c.seed) + classification_csv(*tab));
  } else {
    const MultiTimeSeries data = multi_data(c, info);
    const auto specs = equation_specs(c, data.q());
    SystemFit fit = c.model == "cholesky_sv" ? fit_cholesky_sv(data, specs, ctl, g.threads)
                                             : fit_tvp_var(data, c.lag, specs, ctl);
    json eqs = json::array();
    for (size_t i = 0; i < fit.eq.size(); ++i) {
      fit.eq[i].config_hash = hash;
      write_draws(dir + "/draws/eq" + std::to_string(i + 1), fit.eq[i]);
      eqs.push_back(fit.eq[i].names.empty() || !fit.eq[i].has("beta[1]") ? json{{"pure_sigma", true}}
                                                                          : summarize_draws({fit.eq[i]}));
    }
    summary["equations"] = eqs;
    summary["order"] = fit.order;
    summary["sigma_t"] = sigma_spd_check(fit, c.model == "tvp_var" ? data.T() - c.lag : data.T());
  }
  summary["config_hash"] = hash;
  summary["seed"] = c.seed;
  summary["data"] = info;
  summary["config"] = c.normalized;
  write_json(dir + "/summary.json", summary);
  log_kv("fit_done", {{"out", dir}});
  return 0;
}

int cmd_simulate(const std::string& out_csv) {
  RunConfig c = load_run_config();
  if (!c.data.simulate) throw UserError("cli", "simulate needs data.simulate in the config");
  SimulationSpec spec = *c.data.simulate;
  if (g.seed >= 0) spec.seed = static_cast<std::uint64_t>(g.seed);
  const SimulatedTVP s = simulate_tvp(spec);
  const std::string dir = out_dir(c);
  const std::string hash = config_hash(c);
  const int p = s.data.p(), T = s.data.T();
  std::vector<std::string> h = {"y"};
  std::vector<std::vector<double>> cols = {std::vector<double>(s.data.y.data(), s.data.y.data() + T)};
  for (int j = spec.intercept ? 1 : 0; j < p; ++j) {
    h.push_back(s.data.labels[j]);
    cols.emplace_back(s.data.X.col(j).data(), s.data.X.col(j).data() + T);
  }
  const std::string data_path = out_csv.empty() ? dir + "/data.csv" : out_csv;
  write_text_file(data_path, preamble(hash, spec.seed) + to_csv(h, cols));
  std::vector<std::string> th = {"t"};
  std::vector<std::vector<double>> tc(1);
  for (int t = 0; t <= T; ++t) tc[0].push_back(t);
  for (int j = 0; j < p; ++j) {
    th.push_back("beta" + std::to_string(j + 1));
    tc.emplace_back();
    for (int t = 0; t <= T; ++t) tc.back().push_back(s.beta_path(j, t));
  }
  th.push_back("sigma2");
  tc.emplace_back();
  tc.back().push_back(std::nan(""));
  for (int t = 0; t < T; ++t) tc.back().push_back(s.sigma2[t]);
  write_text_file(dir + "/truth.csv", preamble(hash, spec.seed) + to_csv(th, tc));
  log_kv("simulate_done", {{"data", data_path}, {"T", std::to_string(T)}, {"p", std::to_string(p)}});
  return 0;
}

int cmd_evaluate() {
  RunConfig c = load_run_config();
  if (!c.evaluation) throw UserError("config", "evaluation: block required for evaluate");
  if (c.model != "univariate") throw UserError("config", "evaluate: rolling scores are implemented for univariate models");
  const std::string hash = config_hash(c);
  const std::string dir = out_dir(c);
  json info;
  const TimeSeriesData data = univariate_data(c, info);
  const EvaluationConfig& ev = *c.evaluation;
  std::vector<std::string> names;
  std::vector<std::vector<PredictiveScore>> scores;
  json totals = json::object();
  for (size_t k = 0; k < ev.priors.size(); ++k) {
    const auto& [name, prior] = ev.priors[k];
    RollingOptions ro;
    ro.t0 = ev.t0;
    ro.threads = g.threads;
    ro.chain.n_burn = ev.n_burn;
    ro.chain.n_draws = ev.n_draws;
    ro.chain.thin = ev.thin;
    ro.chain.seed = split_seed(c.seed, k);
    ModelSpec spec{prior, c.spec.opt};
    spec.opt.store_paths = false;
    log_kv("evaluate_prior", {{"prior", name}, {"points", std::to_string(data.T() - ev.t0)}});
    auto s = rolling_lpds(data, spec, ro);
    int missing = 0;
    for (const auto& r : s) missing += r.missing;
    totals[name] = {{"cumulative_lpds", s.empty() ? 0.0 : s.back().cumulative}, {"missing", missing}};
    names.push_back(name);
    scores.push_back(std::move(s));
  }
  write_text_file(dir + "/scores.csv", preamble(hash, c.seed) + scores_csv(names, scores));
  write_json(dir + "/summary.json", {{"config_hash", hash}, {"seed", c.seed}, {"t0", ev.t0}, {"scores", totals},
                                     {"data", info}, {"config", c.normalized}});
  log_kv("evaluate_done", {{"out", dir}});
  return 0;
}

int cmd_classify(const std::string& draws_dir, double threshold) {
  if (draws_dir.empty()) throw UserError("cli", "--draws is required");
  const DrawsStore d = read_draws(draws_dir);
  auto tab = classify_store(d, threshold);
  if (!tab) throw UserError("classify", "draws carry neither indicators nor shrinkage local scales");
  const std::string dir = g.out.empty() ? draws_dir : g.out;
  fs::create_directories(dir);
  write_text_file(dir + "/classification.csv", preamble(d.config_hash, d.seed) + classification_csv(*tab));
  log_kv("classify_done", {{"out", dir}});
  return 0;
}

int cmd_summarize(const std::vector<std::string>& draws_dirs) {
  if (draws_dirs.empty()) throw UserError("cli", "--draws is required");
  std::vector<DrawsStore> chains;
  for (const auto& d : draws_dirs) chains.push_back(read_draws(d));
  const std::string dir = g.out.empty() ? draws_dirs[0] : g.out;
  fs::create_directories(dir);
  json s = summarize_draws(chains);
  write_json(dir + "/summary.json", s);
  log_kv("summarize_done", {{"out", dir}});
  return 0;
}

int cmd_profile(double a, double cc, double phi, int n) {
  if (n < 2) throw UserError("cli", "--grid must be >= 2");
  const std::string dir = g.out.empty() ? "." : g.out;
  fs::create_directories(dir);
  const TPBParams tp{a, cc, phi};
  std::ostringstream os;
  json meta = {{"a", a}, {"c", cc}, {"phi", phi}, {"grid", n}};
  const std::string hash = fnv1a_hex(meta.dump());
  os << preamble(hash, 0) << "section,x,y,value\n";
  std::vector<double> rho(n), dens(n);
  for (int i = 0; i < n; ++i) {
    rho[i] = (i + 0.5) / n;
    dens[i] = std::exp(tpb_log_density(rho[i], tp));
    os << "tpb," << format_double(rho[i]) << ",," << format_double(dens[i]) << "\n";
  }
  for (int i = 0; i < n; ++i) {
    const double x = std::pow(10.0, -4.0 + 6.0 * i / (n - 1));
    os << "marginal_sqrt_theta," << format_double(x) << ",,"
       << format_double(std::exp(log_marginal_sqrt_theta_density(x, a, cc, phi))) << "\n";
  }
  // joint profile of two independent shrinkage coefficients (rho_beta, rho_theta)
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      os << "bivariate," << format_double(rho[i]) << "," << format_double(rho[k]) << ","
         << format_double(dens[i] * dens[k]) << "\n";
  write_text_file(dir + "/profile_grid.csv", os.str());
  log_kv("profile_done", {{"out", dir}});
  return 0;
}

void emit_error(const std::string& code, const std::string& msg, int exit_code) {
  std::cerr << json{{"error", {{"code", code}, {"message", msg}, {"exit_code", exit_code}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian time-varying-parameter models"};
  app.require_subcommand(1);
  auto common = [](CLI::App* s) {
    s->add_option("--config", g.config, "run configuration (JSON)");
    s->add_option("--out", g.out, "output directory override");
    s->add_option("--seed", g.seed, "master seed override")->check(CLI::NonNegativeNumber);
    s->add_option("--threads", g.threads, "worker cap")->check(CLI::PositiveNumber);
    s->add_flag("--quiet", g.quiet, "suppress log lines");
  };
  auto* fit = app.add_subcommand("fit", "run the sampler and write draws/, summary.json");
  common(fit);
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "simulate data from data.simulate");
  common(sim);
  sim->add_option("--data-out", sim_out, "path of the simulated CSV");
  auto* eval = app.add_subcommand("evaluate", "rolling one-step LPDS for the configured priors");
  common(eval);
  std::string draws_dir;
  double threshold = 0.5;
  auto* cls = app.add_subcommand("classify", "zero/fixed/dynamic table from stored draws");
  common(cls);
  cls->add_option("--draws", draws_dir, "draws directory")->required();
  cls->add_option("--threshold", threshold, "shrinkage-coefficient threshold")->check(CLI::Range(0.0, 1.0));
  std::vector<std::string> sum_dirs;
  auto* sum = app.add_subcommand("summarize", "posterior summary of stored draws");
  common(sum);
  sum->add_option("--draws", sum_dirs, "draws directories (one per chain)")->required();
  double pa = 0.5, pc = 0.5, pphi = 1.0;
  int grid = 99;
  auto* prof = app.add_subcommand("prior-profile", "shrinkage-profile and marginal-density grids");
  common(prof);
  prof->add_option("--a", pa, "a")->check(CLI::PositiveNumber);
  prof->add_option("--c", pc, "c")->check(CLI::PositiveNumber);
  prof->add_option("--phi", pphi, "phi")->check(CLI::PositiveNumber);
  prof->add_option("--grid", grid, "grid size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what(), 1);
    return 1;
  }
  try {
    if (*fit) return cmd_fit();
    if (*sim) return cmd_simulate(sim_out);
    if (*eval) return cmd_evaluate();
    if (*cls) return cmd_classify(draws_dir, threshold);
    if (*sum) return cmd_summarize(sum_dirs);
    if (*prof) return cmd_profile(pa, pc, pphi, grid);
  } catch (const UserError& e) {
    emit_error(e.code(), e.what(), 1);
    return 1;
  } catch (const Error& e) {
    emit_error(e.code(), e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    emit_error("internal", e.what(), 2);
    return 2;
  }
  return 2;
}
