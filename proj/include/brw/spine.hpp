#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "brw/models.hpp"
#include "brw/random.hpp"

namespace brw {

/// One draw of (M, S) under the size-biased measure: S is the generation sum
/// and M the weight of the spine child, so M <= S.
struct SpineStep {
  double m = 0.0;
  double s = 0.0;
};

struct PerpetuityPath {
  std::vector<SpineStep> steps;
  std::vector<double> partial_products;  // Pi_0 = 1, Pi_k = M_1 ... M_k
  double r_value = 1.0;                  // 1 + sum_{k <= K} Pi_{k-1} (S_k - 1)
  int truncation_k = 0;                  // first k with Pi_k < eps
  double residual_bound = 0.0;           // E[dropped tail | Pi_K]
};

/// Summary of a perpetuity path without the per-step record.
struct PerpetuitySummary {
  double r_value = 1.0;
  int truncation_k = 0;
  double residual_bound = 0.0;
};

/// Draws the generation under the W_1-size-biased law, then picks the spine
/// child with probability proportional to its weight. Supported: IidCluster
/// (both displacement variants), GaussianBinary, Deterministic.
SpineStep sample_ms(const Model& model, RandomStream& rng);

/// Accumulates R until Pi_k < eps_trunc. Throws NonContracting when the
/// product is still >= eps_trunc after `step_cap` steps.
PerpetuityPath simulate_perpetuity(const Model& model, double eps_trunc, RandomStream& rng,
                                   int step_cap = 1000000);
PerpetuitySummary perpetuity_summary(const Model& model, double eps_trunc, RandomStream& rng,
                                     int step_cap = 1000000);

/// beta / ((beta - 1)(1 - k_beta)), the constant in Q{R > t} ~ C c t^{1-beta}.
/// Throws BetaOutOfRange for beta <= 2 and NotHeavyTail for controls.
double grey_constant(const Model& model);

/// E_Q R = 1 + (E_Q S - 1) / (1 - E_Q M) = (E W_1^2 - k_2) / (1 - k_2).
double perpetuity_mean(const Model& model);

struct QSurvival {
  std::vector<double> thresholds;
  std::vector<double> q;   // (1/n) sum w_i 1{w_i > x}
  std::vector<double> se;
  std::size_t n = 0;
};

/// Importance-weighted estimate of Q{W > x} from samples drawn under P.
QSurvival q_survival_from_plain(std::span<const double> w_samples,
                                std::span<const double> thresholds);

}  // namespace brw
