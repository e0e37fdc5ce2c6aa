// Thin Python layer: numpy in, dicts of numpy arrays out. Priors/options travel as JSON text.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tvp/config.hpp"
#include "tvp/evaluation.hpp"
#include "tvp/io.hpp"
#include "tvp/special.hpp"
#include "tvp/statespace.hpp"

namespace py = pybind11;
using namespace tvp;
using nlohmann::json;

namespace {

TimeSeriesData make_data(const VectorXd& y, const MatrixXd& X, std::vector<std::string> labels) {
  TimeSeriesData d{y, X, std::move(labels)};
  if (d.labels.empty())
    for (int j = 0; j < d.p(); ++j) d.labels.push_back("x" + std::to_string(j + 1));
  d.validate();
  return d;
}

py::dict store_to_dict(const DrawsStore& s) {
  py::dict out;
  MatrixXd M(s.n_draws(), static_cast<int>(s.names.size()));
  for (size_t c = 0; c < s.names.size(); ++c)
    for (int m = 0; m < s.n_draws(); ++m) M(m, c) = s.columns[c][m];
  out["names"] = s.names;
  out["draws"] = M;
  out["labels"] = s.labels;
  out["codes"] = s.codes;
  out["diagnostics"] = s.diagnostics.dump();
  if (!s.paths.empty()) out["paths"] = s.paths;
  return out;
}

}  // namespace

PYBIND11_MODULE(_tvpshrink, m) {
  m.doc() = "Shrinkage and spike-and-slab samplers for time-varying-parameter regressions";

  py::register_exception<UserError>(m, "UserError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "fit",
      [](const VectorXd& y, const MatrixXd& X, const std::string& prior, const std::string& sampler,
         int n_burn, int n_draws, int thin, std::uint64_t seed, int chains, int threads,
         std::vector<std::string> labels) {
        const TimeSeriesData d = make_data(y, X, std::move(labels));
        ModelSpec spec{prior_from_json(json::parse(prior)), sampler_options_from_json(json::parse(sampler))};
        ChainControl ctl;
        ctl.n_burn = n_burn;
        ctl.n_draws = n_draws;
        ctl.thin = thin;
        ctl.seed = seed;
        std::vector<DrawsStore> st;
        {
          py::gil_scoped_release nogil;
          st = run_chains(d, spec, ctl, chains, threads);
        }
        py::list out;
        for (const auto& s : st) out.append(store_to_dict(s));
        return out;
      },
      py::arg("y"), py::arg("X"), py::arg("prior") = "{}", py::arg("sampler") = "{}", py::arg("n_burn") = 1000,
      py::arg("n_draws") = 1000, py::arg("thin") = 1, py::arg("seed"), py::arg("chains") = 1,
      py::arg("threads") = 1, py::arg("labels") = std::vector<std::string>{});

  m.def(
      "simulate",
      [](int T, const VectorXd& beta, const VectorXd& theta, double sigma2, bool intercept, std::uint64_t seed) {
        SimulationSpec sp;
        sp.T = T;
        sp.beta = beta;
        sp.theta = theta;
        sp.sigma2 = sigma2;
        sp.intercept = intercept;
        sp.seed = seed;
        const SimulatedTVP s = simulate_tvp(sp);
        py::dict out;
        out["y"] = s.data.y;
        out["X"] = s.data.X;
        out["beta_path"] = s.beta_path;
        out["labels"] = s.data.labels;
        return out;
      },
      py::arg("T"), py::arg("beta"), py::arg("theta"), py::arg("sigma2") = 1.0, py::arg("intercept") = true,
      py::arg("seed") = 1);

  m.def(
      "log_likelihood",
      [](const VectorXd& y, const MatrixXd& X, const VectorXd& beta, const VectorXd& sqrt_theta, double sigma2) {
        const TimeSeriesData d = make_data(y, X, {});
        TVPParams p{beta, sqrt_theta, VectorXd::Constant(1, sigma2)};
        p.validate(d.T());
        return kalman_filter(p, d, Parametrization::NonCentered).log_likelihood;
      },
      py::arg("y"), py::arg("X"), py::arg("beta"), py::arg("sqrt_theta"), py::arg("sigma2"));

  m.def("conf_hypergeom_u", &conf_hypergeom_u, py::arg("a"), py::arg("b"), py::arg("z"));
  m.def(
      "tpb_density", [](double rho, double a, double c, double phi) { return tpb_density(rho, TPBParams{a, c, phi}); },
      py::arg("rho"), py::arg("a"), py::arg("c"), py::arg("phi"));
  m.def("marginal_sqrt_theta_density", &marginal_sqrt_theta_density, py::arg("x"), py::arg("a"), py::arg("c"),
        py::arg("phi"));
  m.def(
      "classify_indicators",
      [](const std::vector<std::vector<int>>& codes, const std::vector<std::string>& labels) {
        py::list out;
        for (const auto& r : classify_from_indicators(codes, labels))
          out.append(py::make_tuple(r.label, r.p_zero, r.p_fixed, r.p_dynamic));
        return out;
      },
      py::arg("codes"), py::arg("labels") = std::vector<std::string>{});
  m.def(
      "effective_sample_size", [](const std::vector<double>& x) { return effective_sample_size(x).ess; },
      py::arg("x"));
  m.def(
      "config_hash", [](const std::string& text) { return config_hash(config_from_json(json::parse(text, nullptr, true, true))); },
      py::arg("config_json"));
}
