#pragma once
// Explicit random-number handle. Engine is std::mt19937_64 (output fully
// specified by the standard); variates come from fixed algorithms so that a
// seed reproduces the same stream on every platform.
#include <cstdint>
#include <random>
#include <string>

namespace tvp {

// splitmix64 finalizer; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

// Seed of stream `k` derived from a master seed:
//   split_seed(m, k) = splitmix64(splitmix64(m) ^ splitmix64(k + 0x9E3779B97F4A7C15))
// Streams for different k are statistically independent for practical purposes.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t k);

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : eng_(seed) {}

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();
  // Gamma with shape/rate parametrization; robust for tiny shapes.
  double gamma(double shape, double rate);
  // log of a Gamma(shape, 1) draw; avoids underflow when shape << 1.
  double log_gamma1(double shape);
  double beta(double a, double b);
  double exponential(double rate);
  double chi_square(double df) { return gamma(0.5 * df, 0.5); }
  // Uniform integer in {0, ..., n-1}.
  std::uint64_t below(std::uint64_t n);

  std::string state() const;
  void set_state(const std::string& s);

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tvp
