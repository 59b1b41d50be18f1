#include "brw/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "brw/errors.hpp"
#include "brw/special.hpp"

namespace brw {

double pareto_from_uniform(double alpha, double x_min, double u) {
  return x_min * std::pow(u, -1.0 / alpha);
}

std::int64_t discrete_pareto_from_uniform(double beta, double u) {
  return static_cast<std::int64_t>(std::floor(std::pow(u, -1.0 / beta)));
}

double pareto_sample(double alpha, double x_min, RandomStream& rng) {
  return pareto_from_uniform(alpha, x_min, rng.uniform());
}

std::int64_t discrete_pareto_sample(double beta, RandomStream& rng) {
  return discrete_pareto_from_uniform(beta, rng.uniform());
}

double exponential_sample(double rate, RandomStream& rng) {
  return -std::log(rng.uniform()) / rate;
}

double normal_sample(RandomStream& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SizeBiasedDiscretePareto::SizeBiasedDiscretePareto(double beta,
                                                   std::size_t table_size)
    : beta_(beta) {
  if (!(beta > 1.0)) throw InvalidSpec("size-biased Pareto requires beta > 1");
  zeta_ = riemann_zeta(beta);
  survival_.resize(std::max<std::size_t>(table_size, 2));
  for (std::size_t i = 0; i < survival_.size(); ++i) {
    survival_[i] = survival(static_cast<std::int64_t>(i + 1));
  }
  survival_[0] = 1.0;
}

double SizeBiasedDiscretePareto::survival(std::int64_t k) const {
  if (k <= 1) return 1.0;
  const double kd = static_cast<double>(k);
  return (std::pow(kd, 1.0 - beta_) + hurwitz_zeta(beta_, kd + 1.0)) / zeta_;
}

std::int64_t SizeBiasedDiscretePareto::from_uniform(double u) const {
  // K^ = max{k : P{K^ >= k} >= u}.
  if (u > survival_.back()) {
    // First entry with survival < u, searching a decreasing sequence.
    auto it = std::upper_bound(survival_.begin(), survival_.end(), u,
                               [](double value, double s) { return s < value; });
    return static_cast<std::int64_t>(it - survival_.begin());
  }
  // P{K^ >= k} ~ beta/(beta-1) k^{1-beta} / zeta.
  const double guess = std::pow(u * zeta_ * (beta_ - 1.0) / beta_, -1.0 / (beta_ - 1.0));
  auto k = static_cast<std::int64_t>(std::clamp(
      guess, static_cast<double>(survival_.size()), 1e18));
  while (survival(k) < u && k > 1) --k;
  while (survival(k + 1) >= u) ++k;
  return k;
}

}  // namespace brw
