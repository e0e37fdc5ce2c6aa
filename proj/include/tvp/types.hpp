#pragma once
#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Error taxonomy: UserError maps to CLI exit 1, everything else to exit 2.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class UserError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& msg, int t = -1)
      : Error("numerical", msg), t_(t) {}
  int time_index() const { return t_; }

 private:
  int t_;
};

inline constexpr double kSigma2Floor = 1e-12;
inline constexpr double kThetaFloor = 1e-14;
inline constexpr double kDiffuseVariance = 1e5;

struct TimeSeriesData {
  VectorXd y;                       // length T
  MatrixXd X;                       // T x p, row t is x_t
  std::vector<std::string> labels;  // p names

  int T() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(X.cols()); }
  // Throws UserError when any invariant is violated.
  void validate() const;
};

struct TVPParams {
  VectorXd beta;        // beta_j
  VectorXd sqrt_theta;  // signed scales
  VectorXd sigma2;      // length 1 (homoscedastic) or T (per-t)

  int p() const { return static_cast<int>(beta.size()); }
  VectorXd theta() const { return sqrt_theta.array().square(); }
  double sigma2_at(int t) const {
    return sigma2.size() == 1 ? sigma2[0] : sigma2[t];
  }
  void validate(int T) const;
};

enum class Parametrization { Centered, NonCentered };

// p x (T+1); column t holds the state at time t = 0..T.
using StatePath = MatrixXd;

// beta_jt = beta_j + sqrt_theta_j * tilde_beta_jt
StatePath to_centered(const StatePath& tilde, const TVPParams& params);
StatePath to_noncentered(const StatePath& centered, const TVPParams& params);

}  // namespace tvp
