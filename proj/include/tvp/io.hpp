#pragma once
// CSV ingestion/emission, synthetic data generators, draw persistence and summaries.
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tvp/evaluation.hpp"
#include "tvp/multivariate.hpp"
#include "tvp/sampler.hpp"

namespace tvp {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> cols;  // column-major
  int rows() const { return cols.empty() ? 0 : static_cast<int>(cols[0].size()); }
  int col_index(const std::string& name) const;  // throws UserError if absent
};

// RFC-4180 style: comma separated, optional double quotes, header row required, '.' decimal.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& source = "<string>");
// Numbers printed with %.17g so that write/read round-trips exactly.
std::string format_double(double v);
std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& cols);
void write_text_file(const std::string& path, const std::string& text);

// Transformation codes: 1 none, 2 first difference, 3 log, 4 100 * first difference of log.
// Output has the input length; undefined leading entries are NaN.
std::vector<double> apply_transform(const std::vector<double>& x, int code);

struct ColumnMapping {
  std::string y;
  std::vector<std::string> x;
  bool intercept = true;
  std::map<std::string, int> transform;  // column -> code (default 1)
};

struct LoadedData {
  TimeSeriesData data;
  std::map<std::string, int> transforms;  // as applied, per used column
  int dropped_rows = 0;
};
LoadedData load_csv(const std::string& path, const ColumnMapping& map);
LoadedData load_table(const CsvTable& tab, const ColumnMapping& map, const std::string& source);

struct LoadedMulti {
  MultiTimeSeries data;
  std::map<std::string, int> transforms;
  int dropped_rows = 0;
};
LoadedMulti load_csv_multi(const std::string& path, const std::vector<std::string>& columns,
                           const std::map<std::string, int>& transform);
LoadedMulti load_table_multi(const CsvTable& tab, const std::vector<std::string>& columns,
                             const std::map<std::string, int>& transform, const std::string& source);

struct SimulationSpec {
  int T = 200;
  VectorXd beta = (VectorXd(3) << 1.0, -0.5, 0.0).finished();
  VectorXd theta = (VectorXd(3) << 0.02, 0.0, 0.0).finished();
  double sigma2 = 1.0;
  bool sv = false;
  double sv_mu = 0.0, sv_phi = 0.95, sv_sigma2_eta = 0.05;
  bool intercept = true;  // x_1t = 1, remaining regressors iid N(0, 1)
  std::uint64_t seed = 1;
  void validate() const;
};

struct SimulatedTVP {
  TimeSeriesData data;
  StatePath beta_path;  // centered, p x (T+1)
  VectorXd sigma2;      // length T
};
// beta_0 ~ N(beta, Diag theta), beta_t = beta_{t-1} + N(0, Diag theta), y_t = x_t beta_t + eps_t.
SimulatedTVP simulate_tvp(const SimulationSpec& spec);

// Constant-coefficient VAR(r): y_t = c + sum_l Phi_l y_{t-l} + u_t, u_t ~ N(0, Sigma).
// Phi is q x (q r) with blocks [Phi_1 ... Phi_r]. A burn-in of 100 points is discarded.
MultiTimeSeries simulate_var(int T, const VectorXd& c, const MatrixXd& Phi, const MatrixXd& Sigma,
                             std::uint64_t seed);
// Cholesky system with constant strictly-lower B and AR(1) log-variances per equation.
MultiTimeSeries simulate_cholesky_sv(int T, const MatrixXd& B, const VectorXd& mu, double phi,
                                     double sigma2_eta, std::uint64_t seed);

// Columnar float64 draws (little-endian) with a JSON sidecar:
//   dir/draws.bin   n_columns blocks of n_draws doubles, in `names` order
//   dir/paths.bin   optional, per draw p x (T+1) centered path, row-major
//   dir/h.bin       optional, per draw h_0..h_T
//   dir/meta.json   names, labels, shape info, seed, config hash, diagnostics
void write_draws(const std::string& dir, const DrawsStore& d);
DrawsStore read_draws(const std::string& dir);

double quantile(std::vector<double> v, double q);  // type-7 interpolation

// Posterior summary of one chain (or pooled chains) as JSON.
nlohmann::json summarize_draws(const std::vector<DrawsStore>& chains);
// Mean over t of the width of the pointwise 95% band of the centered path of coefficient j.
double mean_band_width(const std::vector<StatePath>& paths, int j);

std::string classification_csv(const ClassificationTable& tab);
std::string scores_csv(const std::vector<std::string>& names,
                       const std::vector<std::vector<PredictiveScore>>& scores);

}  // namespace tvp
