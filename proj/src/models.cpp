#include "brw/models.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "brw/errors.hpp"
#include "brw/special.hpp"

namespace brw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidSpec(what);
}

// Laplace transform of the Gamma(2, rate 2r) inter-arrival law.
double gamma2_laplace(double rate, double z) {
  const double q = 2.0 * rate / (2.0 * rate + z);
  return q * q;
}

// m(gamma s) / (normalized scale)^s for the renewal family:
// E sum_i (a e^{-c tau_i})^s = a^s phi(cs) / (1 - phi(cs)).
double renewal_moment(const RenewalExpParams& p, double a, double s) {
  const double phi = gamma2_laplace(p.renewal_rate, p.decay * s);
  return std::pow(a, s) * phi / (1.0 - phi);
}

// E sum_i (a tau_i^{-theta} e^{-c tau_i})^s over a Poisson(lambda) process
// = lambda a^s Gamma(1 - theta s) (c s)^{theta s - 1}.
double poisson_moment(const PoissonPointsParams& p, double a, double s) {
  return p.intensity * std::pow(a, s) * std::tgamma(1.0 - p.theta * s) *
         std::pow(p.decay * s, p.theta * s - 1.0);
}

void validate(const ModelSpec& spec) {
  require(spec.beta > 1.0, "beta must exceed 1");
  require(spec.gamma > 0.0, "gamma must be positive");
  require(spec.moment_eps > 0.0, "moment_eps must be positive");
  require(spec.delta_max > 0.0, "delta_max must be positive");
  require(spec.truncation_cutoff > 0.0, "truncation_cutoff must be positive");
  require(spec.point_cap >= 1, "point_cap must be at least 1");
  std::visit(
      Overloaded{
          [&](const IidClusterParams& p) {
            require(p.offspring_tail > 1.0, "IidCluster offspring tail index must exceed 1");
            require(p.offspring_tail == spec.beta,
                    "IidCluster offspring tail index must equal beta");
            require(p.displacement_sigma >= 0.0, "IidCluster displacement sigma must be >= 0");
            require(std::isfinite(p.displacement), "IidCluster displacement must be finite");
          },
          [](const GaussianBinaryParams& p) {
            require(p.sigma >= 0.0, "GaussianBinary sigma must be >= 0");
            require(std::isfinite(p.mu), "GaussianBinary mu must be finite");
          },
          [](const PoissonPointsParams& p) {
            require(p.intensity > 0.0, "PoissonPoints intensity must be positive");
            require(p.theta > 0.0 && p.theta < 1.0, "PoissonPoints theta must lie in (0, 1)");
            require(p.decay > 0.0, "PoissonPoints decay must be positive");
          },
          [](const RenewalExpParams& p) {
            require(p.renewal_rate > 0.0, "RenewalExp renewal rate must be positive");
            require(p.decay > 0.0, "RenewalExp decay must be positive");
          },
          [](const DeterministicParams& p) {
            require(p.children >= 2, "Deterministic needs at least 2 children");
            require(std::isfinite(p.displacement), "Deterministic displacement must be finite");
          },
      },
      spec.params);
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::IidCluster: return "IidCluster";
    case Family::GaussianBinary: return "GaussianBinary";
    case Family::PoissonPoints: return "PoissonPoints";
    case Family::RenewalExp: return "RenewalExp";
    case Family::Deterministic: return "Deterministic";
  }
  return "?";
}

double Model::laplace_m(double y) const {
  const double gamma = spec_.gamma;
  return std::visit(
      Overloaded{
          [&](const IidClusterParams& p) {
            const double sig = p.displacement_sigma;
            return mean_child_count_ * std::exp(y * p.displacement + 0.5 * y * y * sig * sig);
          },
          [&](const GaussianBinaryParams& p) {
            return 2.0 * std::exp(y * p.mu + 0.5 * y * y * p.sigma * p.sigma);
          },
          [&](const PoissonPointsParams& p) {
            // A_i = gamma^{-1} log h(tau_i), so e^{y A_i} = h(tau_i)^{y / gamma}.
            const double s = y / gamma;
            if (!(s > 0.0) || !(p.theta * s < 1.0)) {
              throw OutOfDomain("PoissonPoints: m(y) is infinite outside 0 < y < gamma/theta");
            }
            return poisson_moment(p, h_scale_, s);
          },
          [&](const RenewalExpParams& p) {
            const double s = y / gamma;
            if (!(s > 0.0)) throw OutOfDomain("RenewalExp: m(y) is infinite for y <= 0");
            return renewal_moment(p, h_scale_, s);
          },
          [&](const DeterministicParams& p) {
            return p.children * std::exp(y * p.displacement);
          },
      },
      spec_.params);
}

double Model::k_exponent(double x) const {
  if (!(x >= 1.0) || !(x <= spec_.beta + spec_.delta_max)) {
    std::ostringstream msg;
    msg << "k_x requested at x = " << x << " outside [1, " << spec_.beta + spec_.delta_max
        << "]";
    throw OutOfDomain(msg.str());
  }
  if (x == 1.0) return 1.0;
  return laplace_m(spec_.gamma * x) / std::pow(m_gamma_, x);
}

Realization Model::sample_offspring(RandomStream& rng) const {
  Realization out;
  sample_offspring(rng, out);
  return out;
}

void Model::sample_offspring(RandomStream& rng, Realization& out) const {
  out.weights.clear();
  out.truncated = false;
  out.truncated_mass_bound = 0.0;
  const double gamma = spec_.gamma;
  std::visit(
      Overloaded{
          [&](const IidClusterParams& p) {
            const auto k = discrete_pareto_sample(p.offspring_tail, rng);
            if (p.displacement_sigma == 0.0) {
              out.weights.assign(static_cast<std::size_t>(k), base_weight_);
              return;
            }
            out.weights.reserve(static_cast<std::size_t>(k));
            for (std::int64_t i = 0; i < k; ++i) {
              const double d = p.displacement + p.displacement_sigma * normal_sample(rng);
              out.weights.push_back(std::exp(gamma * d) / m_gamma_);
            }
          },
          [&](const GaussianBinaryParams& p) {
            for (int i = 0; i < 2; ++i) {
              const double d = p.mu + p.sigma * normal_sample(rng);
              out.weights.push_back(std::exp(gamma * d) / m_gamma_);
            }
          },
          [&](const PoissonPointsParams& p) {
            double tau = 0.0;
            out.truncated = true;
            for (;;) {
              tau += exponential_sample(p.intensity, rng);
              const double envelope = h_scale_ * std::pow(tau, -p.theta) * std::exp(-p.decay * tau);
              out.weights.push_back(envelope);
              // lambda * int_tau^inf h <= lambda a tau^{-theta} e^{-c tau} / c
              const double residual = p.intensity * envelope / p.decay;
              if (residual < spec_.truncation_cutoff) {
                out.truncated_mass_bound = residual;
                return;
              }
              if (out.weights.size() >= spec_.point_cap) {
                throw TruncationBudgetExceeded("PoissonPoints: residual mass bound not reached");
              }
            }
          },
          [&](const RenewalExpParams& p) {
            double tau = 0.0;
            out.truncated = true;
            const double rate = 2.0 * p.renewal_rate;
            for (;;) {
              tau += exponential_sample(rate, rng) + exponential_sample(rate, rng);
              const double w = std::exp(-p.decay * tau);
              out.weights.push_back(h_scale_ * w);
              // E[sum_{j>i} h(tau_j) | tau_i] = e^{-c tau_i} under the normalization.
              if (w < spec_.truncation_cutoff) {
                out.truncated_mass_bound = w;
                return;
              }
              if (out.weights.size() >= spec_.point_cap) {
                throw TruncationBudgetExceeded("RenewalExp: residual mass bound not reached");
              }
            }
          },
          [&](const DeterministicParams& p) {
            out.weights.assign(static_cast<std::size_t>(p.children), base_weight_);
          },
      },
      spec_.params);
}

double Model::theoretical_tail_constant() const {
  if (!heavy_tail_) {
    throw NotHeavyTail(std::string(family_name(family())) +
                       " is a negative control; P{W_1 > x} is not regularly varying");
  }
  return 1.0 / (1.0 - k_beta_);
}

double Model::second_moment_w1() const {
  return std::visit(
      Overloaded{
          [&](const IidClusterParams& p) {
            if (p.offspring_tail <= 2.0) return kInf;
            const double ek = mean_child_count_;
            // E K^2 = sum_k (2k - 1) P{K >= k}.
            const double ek2 = 2.0 * riemann_zeta(p.offspring_tail - 1.0) - ek;
            const double k2 = laplace_m(2.0 * spec_.gamma) / (m_gamma_ * m_gamma_);
            return k2 + (ek2 - ek) / (ek * ek);
          },
          [&](const GaussianBinaryParams&) {
            return laplace_m(2.0 * spec_.gamma) / (m_gamma_ * m_gamma_) + 0.5;
          },
          [&](const PoissonPointsParams& p) {
            // Var W_1 = lambda int h^2.
            if (2.0 * p.theta >= 1.0) return kInf;
            return 1.0 + poisson_moment(p, h_scale_, 2.0);
          },
          [&](const RenewalExpParams& p) {
            // Cross terms sum to twice the diagonal: E W_1^2 = 3 k_2.
            // k_2 plus cross terms 2 sum_{i<j} E h(tau_i) h(tau_j) = 2 k_2 / a.
            return renewal_moment(p, h_scale_, 2.0) * (1.0 + 2.0 / h_scale_);
          },
          [](const DeterministicParams&) { return 1.0; },
      },
      spec_.params);
}

Model build_model(const ModelSpec& spec) {
  validate(spec);
  Model model(spec);

  std::visit(
      Overloaded{
          [&](const IidClusterParams& p) {
            model.mean_child_count_ = riemann_zeta(p.offspring_tail);
            model.heavy_tail_ = true;
            model.size_biased_ = std::make_shared<const SizeBiasedDiscretePareto>(p.offspring_tail);
          },
          [&](const GaussianBinaryParams&) { model.mean_child_count_ = 2.0; },
          [&](const PoissonPointsParams& p) {
            model.mean_child_count_ = kInf;
            model.h_scale_ =
                std::pow(p.decay, 1.0 - p.theta) / (p.intensity * std::tgamma(1.0 - p.theta));
          },
          [&](const RenewalExpParams& p) {
            model.mean_child_count_ = kInf;
            const double phi = gamma2_laplace(p.renewal_rate, p.decay);
            model.h_scale_ = (1.0 - phi) / phi;
          },
          [&](const DeterministicParams& p) {
            model.mean_child_count_ = static_cast<double>(p.children);
          },
      },
      spec.params);

  model.m_gamma_ = model.laplace_m(spec.gamma);
  if (!(model.m_gamma_ > 0.0) || !std::isfinite(model.m_gamma_)) {
    throw InvalidSpec("m(gamma) must be finite and positive");
  }
  if (const auto* p = std::get_if<IidClusterParams>(&spec.params); p && p->displacement_sigma == 0.0) {
    model.base_weight_ = std::exp(spec.gamma * p->displacement) / model.m_gamma_;
  }
  if (const auto* p = std::get_if<DeterministicParams>(&spec.params)) {
    model.base_weight_ = std::exp(spec.gamma * p->displacement) / model.m_gamma_;
  }

  try {
    model.k_beta_ = model.k_exponent(spec.beta);
  } catch (const OutOfDomain&) {
    model.k_beta_ = kInf;
  }

  if (model.heavy_tail_) {
    if (!(model.k_beta_ < 1.0)) {
      std::ostringstream msg;
      msg << "moment condition violated: k_beta = " << model.k_beta_ << " >= 1";
      throw MomentConditionViolated(msg.str(), model.k_beta_);
    }
    const double k_eps =
        model.laplace_m(spec.gamma * (spec.beta + spec.moment_eps)) /
        std::pow(model.m_gamma_, spec.beta + spec.moment_eps);
    if (!std::isfinite(k_eps)) {
      throw MomentConditionViolated("moment condition violated: k_{beta+eps} is infinite",
                                    model.k_beta_);
    }
    // P{W_1 > x} ~ E[Y^beta] P{K > x} = (k_beta / E K) x^{-beta}.
    model.slowly_varying_const_ = model.k_beta_ / model.mean_child_count_;
  }
  return model;
}

ModelSpec preset(std::string_view name) {
  ModelSpec spec;
  if (name == "iid-cluster-b3") {
    spec.params = IidClusterParams{3.0, 0.0, 0.0};
    spec.beta = 3.0;
  } else if (name == "iid-cluster-b2.5") {
    spec.params = IidClusterParams{2.5, 0.0, 0.0};
    spec.beta = 2.5;
  } else if (name == "iid-cluster-b4") {
    spec.params = IidClusterParams{4.0, 0.0, 0.0};
    spec.beta = 4.0;
  } else if (name == "iid-cluster-b3-gauss") {
    spec.params = IidClusterParams{3.0, 0.0, 0.2};
    spec.beta = 3.0;
  } else if (name == "gauss-binary") {
    spec.params = GaussianBinaryParams{0.0, 0.3};
  } else if (name == "det-2") {
    spec.params = DeterministicParams{2, -std::numbers::ln2};
  } else if (name == "poisson") {
    spec.params = PoissonPointsParams{};
  } else if (name == "renewal-exp") {
    spec.params = RenewalExpParams{};
  } else {
    throw InvalidSpec("unknown model preset '" + std::string(name) + "'");
  }
  return spec;
}

std::vector<std::string> preset_names() {
  return {"iid-cluster-b3", "iid-cluster-b2.5", "iid-cluster-b4", "iid-cluster-b3-gauss",
          "gauss-binary",   "det-2",            "poisson",        "renewal-exp"};
}

}  // namespace brw
