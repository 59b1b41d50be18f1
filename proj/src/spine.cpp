#include "brw/spine.hpp"

#include <algorithm>

#include <cmath>
#include <limits>
#include <sstream>

#include "brw/errors.hpp"

namespace brw {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// A spine displacement is the ordinary N(mu, sigma^2) law tilted by
// e^{gamma D}, i.e. N(mu + gamma sigma^2, sigma^2).
double tilted_gaussian_weight(double mu, double sigma, const Model& model, RandomStream& rng) {
  const double d = mu + model.gamma() * sigma * sigma + sigma * normal_sample(rng);
  return std::exp(model.gamma() * d) / model.m_gamma();
}

double gaussian_weight(double mu, double sigma, const Model& model, RandomStream& rng) {
  const double d = mu + sigma * normal_sample(rng);
  return std::exp(model.gamma() * d) / model.m_gamma();
}

// E_Q M = E sum Y_u^2 = k_2, evaluated without the k_x domain restriction.
double spine_mean_m(const Model& model) {
  return model.laplace_m(2.0 * model.gamma()) / (model.m_gamma() * model.m_gamma());
}

// E[sum_{j > K} Pi_{j-1}(S_j - 1) | Pi_K] = Pi_K (E_Q S - 1) / (1 - E_Q M).
double residual_factor(const Model& model) {
  const double mean_m = spine_mean_m(model);
  if (!(mean_m < 1.0)) return std::numeric_limits<double>::infinity();
  return (model.second_moment_w1() - 1.0) / (1.0 - mean_m);
}

template <class OnStep>
PerpetuitySummary run_perpetuity(const Model& model, double eps_trunc, RandomStream& rng,
                                 int step_cap, OnStep&& on_step) {
  if (!(eps_trunc > 0.0) || !(eps_trunc < 1.0)) {
    throw InvalidSpec("eps_trunc must lie in (0, 1)");
  }
  const double factor = residual_factor(model);
  PerpetuitySummary out;
  double pi = 1.0;
  double r = 1.0;
  for (int k = 1; k <= step_cap; ++k) {
    const SpineStep step = sample_ms(model, rng);
    r += pi * (step.s - 1.0);
    pi *= step.m;
    on_step(step, pi);
    if (pi < eps_trunc) {
      out.r_value = r;
      out.truncation_k = k;
      out.residual_bound = pi * factor;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "spine product still >= " << eps_trunc << " after " << step_cap
      << " steps (geometric mean of M_k = " << std::pow(pi, 1.0 / step_cap) << ")";
  throw NonContracting(msg.str());
}

}  // namespace

SpineStep sample_ms(const Model& model, RandomStream& rng) {
  return std::visit(
      Overloaded{
          [&](const IidClusterParams& p) {
            const auto k = (*model.size_biased_count())(rng);
            if (p.displacement_sigma == 0.0) {
              const double y = std::exp(model.gamma() * p.displacement) / model.m_gamma();
              return SpineStep{y, static_cast<double>(k) * y};
            }
            const double m = tilted_gaussian_weight(p.displacement, p.displacement_sigma, model, rng);
            double s = m;
            for (std::int64_t i = 1; i < k; ++i) {
              s += gaussian_weight(p.displacement, p.displacement_sigma, model, rng);
            }
            return SpineStep{m, s};
          },
          [&](const GaussianBinaryParams& p) {
            const double m = tilted_gaussian_weight(p.mu, p.sigma, model, rng);
            return SpineStep{m, m + gaussian_weight(p.mu, p.sigma, model, rng)};
          },
          [&](const DeterministicParams& p) {
            // All children carry 1/J0 and the generation sum is identically 1.
            return SpineStep{1.0 / p.children, 1.0};
          },
          [&](const auto&) -> SpineStep {
            throw UnsupportedFamily(std::string(family_name(model.family())) +
                                    " has no closed-form size-biased offspring law");
          },
      },
      model.spec().params);
}

PerpetuityPath simulate_perpetuity(const Model& model, double eps_trunc, RandomStream& rng,
                                   int step_cap) {
  PerpetuityPath path;
  path.partial_products.push_back(1.0);
  const PerpetuitySummary summary =
      run_perpetuity(model, eps_trunc, rng, step_cap, [&](const SpineStep& step, double pi) {
        path.steps.push_back(step);
        path.partial_products.push_back(pi);
      });
  path.r_value = summary.r_value;
  path.truncation_k = summary.truncation_k;
  path.residual_bound = summary.residual_bound;
  return path;
}

PerpetuitySummary perpetuity_summary(const Model& model, double eps_trunc, RandomStream& rng,
                                     int step_cap) {
  return run_perpetuity(model, eps_trunc, rng, step_cap, [](const SpineStep&, double) {});
}

double grey_constant(const Model& model) {
  if (!model.heavy_tail()) {
    throw NotHeavyTail(std::string(family_name(model.family())) + " is a negative control");
  }
  const double beta = model.beta();
  if (!(beta > 2.0)) {
    throw BetaOutOfRange("perpetuity tail constant requires beta > 2");
  }
  return beta / ((beta - 1.0) * (1.0 - model.k_beta()));
}

double perpetuity_mean(const Model& model) {
  const double k2 = spine_mean_m(model);
  return (model.second_moment_w1() - k2) / (1.0 - k2);
}

QSurvival q_survival_from_plain(std::span<const double> w_samples,
                                std::span<const double> thresholds) {
  if (w_samples.empty()) throw EmptySample("q_survival_from_plain: no samples");
  QSurvival out;
  out.n = w_samples.size();
  out.thresholds.assign(thresholds.begin(), thresholds.end());
  std::vector<double> sorted(w_samples.begin(), w_samples.end());
  std::sort(sorted.begin(), sorted.end());
  // Suffix sums of w and w^2 over the ascending order statistics.
  std::vector<double> tail(sorted.size() + 1, 0.0), tail_sq(sorted.size() + 1, 0.0);
  for (std::size_t i = sorted.size(); i-- > 0;) {
    tail[i] = tail[i + 1] + sorted[i];
    tail_sq[i] = tail_sq[i + 1] + sorted[i] * sorted[i];
  }
  const auto n = static_cast<double>(out.n);
  for (double x : thresholds) {
    const auto first = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
    const double mean = tail[first] / n;
    const double var =
        out.n > 1 ? std::max(0.0, (tail_sq[first] - n * mean * mean) / (n - 1.0)) : 0.0;
    out.q.push_back(mean);
    out.se.push_back(std::sqrt(var / n));
  }
  return out;
}

}  // namespace brw
