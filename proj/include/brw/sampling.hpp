#pragma once

#include <cstdint>
#include <vector>

#include "brw/random.hpp"

namespace brw {

// Inverse-CDF transforms, exposed separately so boundary conventions can be
// checked without a generator. `u` is in (0, 1].

/// X = x_min * u^{-1/alpha}; u = 1 maps to x_min.
double pareto_from_uniform(double alpha, double x_min, double u);
/// K = floor(u^{-1/beta}) >= 1, which gives P{K >= k} = k^{-beta} exactly.
std::int64_t discrete_pareto_from_uniform(double beta, double u);

/// P{X > x} = (x_min / x)^alpha for x >= x_min.
double pareto_sample(double alpha, double x_min, RandomStream& rng);
/// P{K >= k} = k^{-beta}, k = 1, 2, ...
std::int64_t discrete_pareto_sample(double beta, RandomStream& rng);
double exponential_sample(double rate, RandomStream& rng);
/// Standard normal via Box-Muller; always consumes two uniforms.
double normal_sample(RandomStream& rng);

/// Size-biased discrete Pareto: P{K^ = k} = k P{K = k} / E K with
/// P{K >= k} = k^{-beta}, beta > 1.
///
/// Survival is  P{K^ >= k} = (k^{1-beta} + zeta(beta, k+1)) / zeta(beta).
/// Small k are inverted by binary search over a precomputed table; the tail
/// starts from the asymptotic inverse and walks to the exact integer.
class SizeBiasedDiscretePareto {
 public:
  explicit SizeBiasedDiscretePareto(double beta, std::size_t table_size = 4096);

  std::int64_t operator()(RandomStream& rng) const {
    return from_uniform(rng.uniform());
  }
  std::int64_t from_uniform(double u) const;

  /// P{K^ >= k}.
  double survival(std::int64_t k) const;
  double beta() const { return beta_; }

 private:
  double beta_;
  double zeta_;
  // survival_[k-1] = P{K^ >= k}, strictly decreasing from 1.
  std::vector<double> survival_;
};

}  // namespace brw
