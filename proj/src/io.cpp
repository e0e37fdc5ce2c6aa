#include "tvp/io.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace tvp {

using nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "draw files are written little-endian");

int CsvTable::col_index(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw UserError("csv", "no column named '" + name + "'");
  return static_cast<int>(it - header.begin());
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UserError("io", "cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Split into records of fields; quotes may contain separators, newlines and "" escapes.
std::vector<std::vector<std::string>> split_records(const std::string& text, const std::string& source) {
  std::vector<std::vector<std::string>> recs;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false, at_line_start = true;
  const size_t n = text.size();
  for (size_t i = 0; i < n; ++i) {
    const char ch = text[i];
    if (at_line_start && !quoted && ch == '#') {  // comment line
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    at_line_start = false;
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      rec.push_back(field);
      field.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        rec.push_back(field);
        recs.push_back(rec);
      }
      rec.clear();
      field.clear();
      any = false;
      at_line_start = true;
    } else {
      field += ch;
      any = true;
    }
  }
  if (quoted) throw UserError("csv", source + ": unterminated quoted field");
  if (any || !field.empty()) {
    rec.push_back(field);
    recs.push_back(rec);
  }
  return recs;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& source) {
  const auto recs = split_records(text, source);
  if (recs.empty()) throw UserError("csv", source + ": missing header row");
  CsvTable t;
  for (const auto& h : recs[0]) t.header.push_back(trim(h));
  const size_t k = t.header.size();
  t.cols.assign(k, {});
  for (size_t r = 1; r < recs.size(); ++r) {
    if (recs[r].size() != k)
      throw UserError("csv", source + ": row " + std::to_string(r) + " has " + std::to_string(recs[r].size()) +
                                 " fields, header has " + std::to_string(k));
    for (size_t c = 0; c < k; ++c) {
      const std::string cell = trim(recs[r][c]);
      char* end = nullptr;
      errno = 0;
      const double v = cell.empty() ? 0.0 : std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v))
        throw UserError("csv", source + ": non-numeric cell '" + cell + "' at row " + std::to_string(r) +
                                   ", column '" + t.header[c] + "'");
      t.cols[c].push_back(v);
    }
  }
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {
std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) o += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return o + "\"";
}
}  // namespace

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols) {
  std::string o;
  for (size_t c = 0; c < header.size(); ++c) o += (c ? "," : "") + quote_field(header[c]);
  o += "\n";
  const size_t n = cols.empty() ? 0 : cols[0].size();
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < cols.size(); ++c) o += (c ? "," : "") + format_double(cols[c][r]);
    o += "\n";
  }
  return o;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UserError("io", "cannot write " + path);
  f << text;
  if (!f) throw UserError("io", "write failed for " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& cols) {
  write_text_file(path, to_csv(header, cols));
}

std::vector<double> apply_transform(const std::vector<double>& x, int code) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const size_t n = x.size();
  std::vector<double> y(n, nan);
  auto lg = [&](double v) { return v > 0 ? std::log(v) : nan; };
  switch (code) {
    case 1: y = x; break;
    case 2:
      for (size_t i = 1; i < n; ++i) y[i] = x[i] - x[i - 1];
      break;
    case 3:
      for (size_t i = 0; i < n; ++i) y[i] = lg(x[i]);
      break;
    case 4:
      for (size_t i = 1; i < n; ++i) y[i] = 100.0 * (lg(x[i]) - lg(x[i - 1]));
      break;
    default: throw UserError("transform", "transformation code must be 1, 2, 3 or 4");
  }
  return y;
}

namespace {

// Transform the requested columns and drop leading undefined rows.
std::vector<std::vector<double>> transformed_columns(const CsvTable& tab, const std::vector<std::string>& names,
                                                     const std::map<std::string, int>& transform,
                                                     std::map<std::string, int>& applied, int& dropped,
                                                     const std::string& source) {
  for (const auto& [name, code] : transform) {
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw UserError("transform", "transformation given for unused column '" + name + "'");
    (void)code;
  }
  std::vector<std::vector<double>> cols;
  for (const auto& nm : names) {
    auto it = transform.find(nm);
    const int code = it == transform.end() ? 1 : it->second;
    applied[nm] = code;
    cols.push_back(apply_transform(tab.cols[tab.col_index(nm)], code));
  }
  const int n = tab.rows();
  int r0 = 0;
  auto row_ok = [&](int r) {
    for (const auto& c : cols)
      if (!std::isfinite(c[r])) return false;
    return true;
  };
  while (r0 < n && !row_ok(r0)) ++r0;
  for (int r = r0; r < n; ++r)
    if (!row_ok(r)) {
      for (size_t c = 0; c < cols.size(); ++c)
        if (!std::isfinite(cols[c][r]))
          throw UserError("transform", source + ": NaN after transform at row " + std::to_string(r + 1) +
                                           ", column '" + names[c] + "'");
    }
  dropped = r0;
  for (auto& c : cols) c.erase(c.begin(), c.begin() + r0);
  return cols;
}

}  // namespace

LoadedData load_table(const CsvTable& tab, const ColumnMapping& map, const std::string& source) {
  if (map.y.empty()) throw UserError("config", "data.y (response column) is required");
  std::vector<std::string> names = {map.y};
  names.insert(names.end(), map.x.begin(), map.x.end());
  LoadedData out;
  const auto cols = transformed_columns(tab, names, map.transform, out.transforms, out.dropped_rows, source);
  const int T = cols.empty() ? 0 : static_cast<int>(cols[0].size());
  const int p = static_cast<int>(map.x.size()) + (map.intercept ? 1 : 0);
  if (T < 2) throw UserError("data", source + ": series too short after transformation");
  out.data.y = Eigen::Map<const VectorXd>(cols[0].data(), T);
  out.data.X.resize(T, p);
  int j = 0;
  if (map.intercept) {
    out.data.X.col(j++).setOnes();
    out.data.labels.push_back("intercept");
  }
  for (size_t k = 0; k < map.x.size(); ++k) {
    out.data.X.col(j++) = Eigen::Map<const VectorXd>(cols[k + 1].data(), T);
    out.data.labels.push_back(map.x[k]);
  }
  out.data.validate();
  return out;
}

LoadedData load_csv(const std::string& path, const ColumnMapping& map) { return load_table(read_csv(path), map, path); }

LoadedMulti load_table_multi(const CsvTable& tab, const std::vector<std::string>& columns,
                             const std::map<std::string, int>& transform, const std::string& source) {
  LoadedMulti out;
  const auto cols = transformed_columns(tab, columns, transform, out.transforms, out.dropped_rows, source);
  const int T = cols.empty() ? 0 : static_cast<int>(cols[0].size());
  out.data.Y.resize(T, static_cast<int>(columns.size()));
  for (size_t k = 0; k < columns.size(); ++k) out.data.Y.col(k) = Eigen::Map<const VectorXd>(cols[k].data(), T);
  out.data.names = columns;
  out.data.validate();
  return out;
}

LoadedMulti load_csv_multi(const std::string& path, const std::vector<std::string>& columns,
                           const std::map<std::string, int>& transform) {
  return load_table_multi(read_csv(path), columns, transform, path);
}

void SimulationSpec::validate() const {
  if (T < 2) throw UserError("simulate", "T must be >= 2");
  if (beta.size() < 1 || beta.size() != theta.size())
    throw UserError("simulate", "beta and theta must have the same positive length");
  if ((theta.array() < 0).any()) throw UserError("simulate", "theta must be nonnegative");
  if (!sv && !(sigma2 > 0)) throw UserError("simulate", "sigma2 must be positive");
  if (sv && !(std::abs(sv_phi) < 1 && sv_sigma2_eta > 0)) throw UserError("simulate", "invalid SV parameters");
}

SimulatedTVP simulate_tvp(const SimulationSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int T = spec.T, p = static_cast<int>(spec.beta.size());
  SimulatedTVP s;
  s.data.X.resize(T, p);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < p; ++j) s.data.X(t, j) = (j == 0 && spec.intercept) ? 1.0 : rng.normal();
  for (int j = 0; j < p; ++j) s.data.labels.push_back(j == 0 && spec.intercept ? "intercept" : "x" + std::to_string(j + 1));
  s.beta_path.resize(p, T + 1);
  for (int j = 0; j < p; ++j) {
    const double sd = std::sqrt(spec.theta[j]);
    s.beta_path(j, 0) = spec.beta[j] + sd * rng.normal();
    for (int t = 1; t <= T; ++t) s.beta_path(j, t) = s.beta_path(j, t - 1) + sd * rng.normal();
  }
  s.sigma2.resize(T);
  if (spec.sv) {
    double h = spec.sv_mu + std::sqrt(spec.sv_sigma2_eta / (1 - spec.sv_phi * spec.sv_phi)) * rng.normal();
    for (int t = 0; t < T; ++t) {
      h = spec.sv_mu + spec.sv_phi * (h - spec.sv_mu) + std::sqrt(spec.sv_sigma2_eta) * rng.normal();
      s.sigma2[t] = std::exp(h);
    }
  } else {
    s.sigma2.setConstant(spec.sigma2);
  }
  s.data.y.resize(T);
  for (int t = 0; t < T; ++t)
    s.data.y[t] = s.data.X.row(t).dot(s.beta_path.col(t + 1)) + std::sqrt(s.sigma2[t]) * rng.normal();
  return s;
}

MultiTimeSeries simulate_var(int T, const VectorXd& c, const MatrixXd& Phi, const MatrixXd& Sigma,
                             std::uint64_t seed) {
  const int q = static_cast<int>(c.size());
  if (q < 1 || Phi.rows() != q || Phi.cols() % q != 0 || Sigma.rows() != q || Sigma.cols() != q)
    throw UserError("simulate", "inconsistent VAR dimensions");
  const int r = static_cast<int>(Phi.cols()) / q;
  Eigen::LLT<MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw UserError("simulate", "Sigma must be positive definite");
  const MatrixXd L = llt.matrixL();
  Rng rng(seed);
  const int burn = 100, n = T + burn;
  MatrixXd Y = MatrixXd::Zero(n + r, q);
  for (int t = r; t < n + r; ++t) {
    VectorXd m = c;
    for (int l = 1; l <= r; ++l) m += Phi.middleCols((l - 1) * q, q) * Y.row(t - l).transpose();
    Y.row(t) = (m + L * std_normal_vector(rng, q)).transpose();
  }
  MultiTimeSeries out;
  out.Y = Y.bottomRows(T);
  for (int i = 0; i < q; ++i) out.names.push_back("y" + std::to_string(i + 1));
  return out;
}

MultiTimeSeries simulate_cholesky_sv(int T, const MatrixXd& B, const VectorXd& mu, double phi, double sigma2_eta,
                                     std::uint64_t seed) {
  const int q = static_cast<int>(B.rows());
  if (B.cols() != q || mu.size() != q) throw UserError("simulate", "inconsistent Cholesky-SV dimensions");
  Rng rng(seed);
  const MatrixXd A = unit_lower_inverse(B);
  VectorXd h(q);
  for (int i = 0; i < q; ++i) h[i] = mu[i] + std::sqrt(sigma2_eta / (1 - phi * phi)) * rng.normal();
  MultiTimeSeries out;
  out.Y.resize(T, q);
  for (int t = 0; t < T; ++t) {
    VectorXd e(q);
    for (int i = 0; i < q; ++i) {
      h[i] = mu[i] + phi * (h[i] - mu[i]) + std::sqrt(sigma2_eta) * rng.normal();
      e[i] = std::exp(0.5 * h[i]) * rng.normal();
    }
    out.Y.row(t) = (A * e).transpose();
  }
  for (int i = 0; i < q; ++i) out.names.push_back("y" + std::to_string(i + 1));
  return out;
}

// ---------------------------------------------------------------- draw persistence

namespace {

void write_doubles(std::ofstream& f, const double* p, size_t n) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

std::vector<double> read_doubles(const std::string& path, size_t expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UserError("io", "cannot open " + path);
  std::vector<double> v(expected);
  f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(expected * sizeof(double)));
  if (static_cast<size_t>(f.gcount()) != expected * sizeof(double))
    throw UserError("io", path + " is truncated");
  return v;
}

}  // namespace

void write_draws(const std::string& dir, const DrawsStore& d) {
  fs::create_directories(dir);
  const int M = d.n_draws();
  {
    std::ofstream f(dir + "/draws.bin", std::ios::binary);
    if (!f) throw UserError("io", "cannot write " + dir + "/draws.bin");
    for (const auto& c : d.columns) write_doubles(f, c.data(), c.size());
  }
  json meta = {{"format", "tvpshrink-draws-1"},
               {"names", d.names},
               {"labels", d.labels},
               {"n_draws", M},
               {"seed", d.seed},
               {"config_hash", d.config_hash},
               {"thin", d.thin},
               {"n_burn", d.n_burn},
               {"diagnostics", d.diagnostics},
               {"byte_order", "little"}};
  if (!d.paths.empty()) {
    std::ofstream f(dir + "/paths.bin", std::ios::binary);
    for (const auto& P : d.paths) {
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = P;
      write_doubles(f, R.data(), R.size());
    }
    meta["paths"] = {{"rows", d.paths[0].rows()}, {"cols", d.paths[0].cols()}};
  } else {
    meta["paths"] = nullptr;
  }
  if (!d.h_paths.empty()) {
    std::ofstream f(dir + "/h.bin", std::ios::binary);
    for (const auto& h : d.h_paths) write_doubles(f, h.data(), h.size());
    meta["h_length"] = d.h_paths[0].size();
  } else {
    meta["h_length"] = nullptr;
  }
  write_text_file(dir + "/meta.json", meta.dump(1) + "\n");
}

DrawsStore read_draws(const std::string& dir) {
  json meta;
  try {
    std::ifstream f(dir + "/meta.json");
    if (!f) throw UserError("io", "cannot open " + dir + "/meta.json");
    meta = json::parse(f);
  } catch (const json::exception& e) {
    throw UserError("io", dir + "/meta.json: " + e.what());
  }
  if (meta.value("format", "") != "tvpshrink-draws-1") throw UserError("io", "unrecognized draws format in " + dir);
  DrawsStore d;
  d.names = meta["names"].get<std::vector<std::string>>();
  d.labels = meta["labels"].get<std::vector<std::string>>();
  const int M = meta["n_draws"];
  d.seed = meta["seed"];
  d.config_hash = meta["config_hash"];
  d.thin = meta["thin"];
  d.n_burn = meta["n_burn"];
  d.diagnostics = meta["diagnostics"];
  const auto all = read_doubles(dir + "/draws.bin", d.names.size() * static_cast<size_t>(M));
  d.columns.resize(d.names.size());
  for (size_t c = 0; c < d.names.size(); ++c) d.columns[c].assign(all.begin() + c * M, all.begin() + (c + 1) * M);
  if (!meta["paths"].is_null()) {
    const int r = meta["paths"]["rows"], cc = meta["paths"]["cols"];
    const auto v = read_doubles(dir + "/paths.bin", static_cast<size_t>(M) * r * cc);
    for (int m = 0; m < M; ++m)
      d.paths.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          v.data() + static_cast<size_t>(m) * r * cc, r, cc));
  }
  if (!meta["h_length"].is_null()) {
    const int L = meta["h_length"];
    const auto v = read_doubles(dir + "/h.bin", static_cast<size_t>(M) * L);
    for (int m = 0; m < M; ++m) d.h_paths.push_back(Eigen::Map<const VectorXd>(v.data() + static_cast<size_t>(m) * L, L));
  }
  if (d.has("code[1]")) {
    const int p = d.p();
    d.codes.assign(M, std::vector<int>(p));
    for (int j = 0; j < p; ++j) {
      const auto& c = d.column("code[" + std::to_string(j + 1) + "]");
      for (int m = 0; m < M; ++m) d.codes[m][j] = static_cast<int>(c[m]);
    }
  }
  return d;
}

// ---------------------------------------------------------------- summaries

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * q;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

double mean_band_width(const std::vector<StatePath>& paths, int j) {
  if (paths.empty()) return std::numeric_limits<double>::quiet_NaN();
  const int T1 = static_cast<int>(paths[0].cols());
  double s = 0;
  std::vector<double> v(paths.size());
  for (int t = 1; t < T1; ++t) {
    for (size_t m = 0; m < paths.size(); ++m) v[m] = paths[m](j, t);
    s += quantile(v, 0.975) - quantile(v, 0.025);
  }
  return s / (T1 - 1);
}

namespace {
double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / v.size();
}
}  // namespace

json summarize_draws(const std::vector<DrawsStore>& chains) {
  if (chains.empty() || chains[0].n_draws() == 0) throw UserError("summarize", "no draws to summarize");
  const DrawsStore& d0 = chains[0];
  json out;
  out["chains"] = chains.size();
  out["draws_per_chain"] = d0.n_draws();
  out["seed"] = d0.seed;
  out["config_hash"] = d0.config_hash;
  json par = json::object();
  for (size_t c = 0; c < d0.names.size(); ++c) {
    std::vector<double> all;
    double ess = 0;
    bool ess_ok = true;
    for (const auto& ch : chains) {
      const auto& col = ch.column(d0.names[c]);
      all.insert(all.end(), col.begin(), col.end());
      if (col.size() >= 100)
        ess += effective_sample_size(col).ess;
      else
        ess_ok = false;
    }
    const double mean = mean_of(all);
    double var = 0;
    for (double v : all) var += (v - mean) * (v - mean);
    var /= std::max<size_t>(1, all.size() - 1);
    json e = {{"mean", mean}, {"sd", std::sqrt(var)}, {"q025", quantile(all, 0.025)},
              {"median", quantile(all, 0.5)}, {"q975", quantile(all, 0.975)}};
    e["ess"] = ess_ok ? json(ess) : json(nullptr);
    par[d0.names[c]] = e;
  }
  out["parameters"] = par;
  const int p = d0.p();
  json coefs = json::array();
  for (int j = 0; j < p; ++j) {
    const std::string k = std::to_string(j + 1);
    std::vector<double> st, b;
    std::vector<StatePath> paths;
    for (const auto& ch : chains) {
      const auto& s = ch.column("sqrt_theta[" + k + "]");
      const auto& bb = ch.column("beta[" + k + "]");
      st.insert(st.end(), s.begin(), s.end());
      b.insert(b.end(), bb.begin(), bb.end());
      paths.insert(paths.end(), ch.paths.begin(), ch.paths.end());
    }
    std::vector<double> ast(st.size());
    long small = 0;
    for (size_t m = 0; m < st.size(); ++m) {
      ast[m] = std::abs(st[m]);
      small += ast[m] < 0.01;
    }
    json e = {{"label", j < static_cast<int>(d0.labels.size()) ? d0.labels[j] : "x" + k},
              {"beta_mean", mean_of(b)},
              {"abs_sqrt_theta_median", quantile(ast, 0.5)},
              {"prob_abs_sqrt_theta_below_0.01", double(small) / st.size()}};
    e["band_width_95"] = paths.empty() ? json(nullptr) : json(mean_band_width(paths, j));
    coefs.push_back(e);
  }
  out["coefficients"] = coefs;
  json diag = json::array();
  for (const auto& ch : chains) diag.push_back(ch.diagnostics);
  out["diagnostics"] = diag;
  return out;
}

std::string classification_csv(const ClassificationTable& tab) {
  std::string o = "label,p_zero,p_fixed,p_dynamic\n";
  for (const auto& r : tab)
    o += quote_field(r.label) + "," + format_double(r.p_zero) + "," + format_double(r.p_fixed) + "," +
         format_double(r.p_dynamic) + "\n";
  return o;
}

std::string scores_csv(const std::vector<std::string>& names, const std::vector<std::vector<PredictiveScore>>& s) {
  std::string o = "t";
  for (const auto& n : names) o += "," + quote_field(n + "_lpds") + "," + quote_field(n + "_cumulative");
  o += "\n";
  const size_t n = s.empty() ? 0 : s[0].size();
  for (size_t k = 0; k < n; ++k) {
    o += std::to_string(s[0][k].t);
    for (const auto& col : s)
      o += "," + (col[k].missing ? std::string("NA") : format_double(col[k].lpds)) + "," +
           format_double(col[k].cumulative);
    o += "\n";
  }
  return o;
}

}  // namespace tvp
