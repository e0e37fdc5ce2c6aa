#include "tvp/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tvp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t k) {
  return splitmix64(splitmix64(master) ^ splitmix64(k + 0x9E3779B97F4A7C15ULL));
}

double Rng::uniform() {
  return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  boost::random::normal_distribution<double> d(0.0, 1.0);
  return d(eng_);
}

double Rng::log_gamma1(double shape) {
  if (!(shape > 0)) throw std::invalid_argument("gamma shape must be positive");
  if (shape >= 1.0) {
    boost::random::gamma_distribution<double> d(shape, 1.0);
    return std::log(d(eng_));
  }
  // G(a) = G(a+1) * U^(1/a), evaluated on the log scale.
  boost::random::gamma_distribution<double> d(shape + 1.0, 1.0);
  return std::log(d(eng_)) + std::log(uniform()) / shape;
}

double Rng::gamma(double shape, double rate) {
  if (!(rate > 0)) throw std::invalid_argument("gamma rate must be positive");
  return std::exp(log_gamma1(shape) - std::log(rate));
}

double Rng::beta(double a, double b) {
  const double la = log_gamma1(a), lb = log_gamma1(b);
  const double m = std::max(la, lb);
  const double ea = std::exp(la - m), eb = std::exp(lb - m);
  return ea / (ea + eb);
}

double Rng::exponential(double rate) {
  boost::random::exponential_distribution<double> d(rate);
  return d(eng_);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below(0)");
  // Lemire-free rejection for exactness.
  const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do x = eng_();
  while (x >= lim);
  return x % n;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << eng_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> eng_;
  if (!is) throw std::runtime_error("invalid RNG state string");
}

}  // namespace tvp
