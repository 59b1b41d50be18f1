#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "brw/random.hpp"
#include "brw/sampling.hpp"

namespace brw {

enum class Family { IidCluster, GaussianBinary, PoissonPoints, RenewalExp, Deterministic };

std::string_view family_name(Family family);

/// K children with P{K >= k} = k^{-offspring_tail}, each displaced by D_i.
/// displacement_sigma == 0 is the constant-displacement variant (D_i = d),
/// for which gamma cancels and k_x = (E K)^{1-x}. Otherwise D_i ~ N(d, sigma^2).
struct IidClusterParams {
  double offspring_tail = 3.0;
  double displacement = 0.0;
  double displacement_sigma = 0.0;
};

/// Two children at i.i.d. N(mu, sigma^2) positions.
struct GaussianBinaryParams {
  double mu = 0.0;
  double sigma = 0.3;
};

/// Poisson(intensity) arrival times tau_i with weights h(tau_i),
/// h(t) = a t^{-theta} e^{-decay t}; a is fixed by E sum h(tau_i) = 1.
struct PoissonPointsParams {
  double intensity = 1.0;
  double theta = 0.1;
  double decay = 1.0;
};

/// Renewal times with Gamma(2) inter-arrivals of mean 1/renewal_rate and
/// weights h(t) = a e^{-decay t}; a is fixed by E sum h(tau_i) = 1.
struct RenewalExpParams {
  double renewal_rate = 1.0;
  double decay = 1.0;
};

/// Exactly `children` children, all at `displacement`.
struct DeterministicParams {
  int children = 2;
  double displacement = -std::numbers::ln2;
};

using FamilyParams = std::variant<IidClusterParams, GaussianBinaryParams, PoissonPointsParams,
                                  RenewalExpParams, DeterministicParams>;

struct ModelSpec {
  FamilyParams params = IidClusterParams{};
  double beta = 3.0;               // target tail index
  double gamma = 1.0;              // tilt
  double moment_eps = 0.5;         // requires k_{beta+eps} < inf for heavy families
  double delta_max = 0.5;          // k_x domain is [1, beta + delta_max]
  double truncation_cutoff = 1e-12;  // residual-mass cutoff, infinite families
  std::size_t point_cap = 100000;    // max enumerated points per draw

  Family family() const { return static_cast<Family>(params.index()); }
};

/// Normalized child weights {Y_u : |u| = 1} of one particle.
struct Realization {
  std::vector<double> weights;
  bool truncated = false;
  // For infinite families: E[discarded sum | enumerated points], which is
  // the exact conditional mean of the residual mass.
  double truncated_mass_bound = 0.0;
};

/// Immutable point-process model with closed-form moment functions.
/// Safe for concurrent reads; sampling mutates only the caller's stream.
class Model {
 public:
  const ModelSpec& spec() const { return spec_; }
  Family family() const { return spec_.family(); }
  double beta() const { return spec_.beta; }
  double gamma() const { return spec_.gamma; }
  double m_gamma() const { return m_gamma_; }
  double k_beta() const { return k_beta_; }

  /// True for families satisfying both the moment condition and regular
  /// variation of P{W_1 > x}; false for negative controls.
  bool heavy_tail() const { return heavy_tail_; }

  /// Constant c in P{W_1 > x} ~ c x^{-beta} (heavy families; 0 otherwise).
  double slowly_varying_const() const { return slowly_varying_const_; }

  /// m(y) = E sum_u e^{y A_u}. Throws OutOfDomain where m(y) = inf.
  double laplace_m(double y) const;

  /// k_x = E sum_{|u|=1} Y_u^x = m(gamma x) / m(gamma)^x, x in [1, beta + delta_max].
  double k_exponent(double x) const;

  Realization sample_offspring(RandomStream& rng) const;
  /// Buffer-reusing variant for hot loops.
  void sample_offspring(RandomStream& rng, Realization& out) const;

  /// (1 - k_beta)^{-1}. Throws NotHeavyTail for negative controls.
  double theoretical_tail_constant() const;

  /// E W_1^2 in closed form (inf when it diverges).
  double second_moment_w1() const;

  /// E K for IidCluster (number of children), J0 for Deterministic, 2 for
  /// GaussianBinary; inf for infinite point processes.
  double mean_child_count() const { return mean_child_count_; }

  /// Size-biased child-count law, IidCluster only (nullptr otherwise).
  const SizeBiasedDiscretePareto* size_biased_count() const { return size_biased_.get(); }

 private:
  friend Model build_model(const ModelSpec& spec);
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}

  ModelSpec spec_;
  double m_gamma_ = 1.0;
  double k_beta_ = 0.0;
  bool heavy_tail_ = false;
  double slowly_varying_const_ = 0.0;
  double mean_child_count_ = 0.0;
  double base_weight_ = 0.0;   // constant weight, constant-displacement families
  double h_scale_ = 0.0;       // the constant a in h(t), infinite families
  std::shared_ptr<const SizeBiasedDiscretePareto> size_biased_;
};

/// Validates `spec` and precomputes closed forms. Throws InvalidSpec or
/// MomentConditionViolated.
Model build_model(const ModelSpec& spec);

/// Named presets: "iid-cluster-b3", "iid-cluster-b2.5", "iid-cluster-b4",
/// "iid-cluster-b3-gauss", "gauss-binary", "det-2", "poisson", "renewal-exp".
ModelSpec preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace brw
