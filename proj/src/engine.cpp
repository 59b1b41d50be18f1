#include "brw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "brw/errors.hpp"
#include "brw/parallel.hpp"

namespace brw {
namespace {

struct PendingParticle {
  double weight;
  int depth;
  std::uint64_t stream_id;
};

struct WalkResult {
  double pruned_mass = 0.0;
  bool failed = false;
};

// Visits every particle of depth <= max_depth once, calling
// visit(depth, weight). Memory is bounded by depth times branching.
template <class Visitor>
WalkResult walk_tree(const Model& model, const RandomStream& root, int max_depth,
                     double weight_floor, std::size_t population_cap, Visitor&& visit) {
  WalkResult result;
  std::vector<PendingParticle> stack;
  stack.push_back({1.0, 0, root.stream_id()});
  Realization children;
  while (!stack.empty()) {
    const PendingParticle p = stack.back();
    stack.pop_back();
    visit(p.depth, p.weight);
    if (p.depth == max_depth) continue;

    RandomStream rng(root.seed(), p.stream_id);
    model.sample_offspring(rng, children);
    const auto& ys = children.weights;
    // Pushed in reverse so children are visited in index order.
    for (std::size_t i = ys.size(); i-- > 0;) {
      const double w = p.weight * ys[i];
      if (w < weight_floor) {
        result.pruned_mass += w;
        continue;
      }
      stack.push_back({w, p.depth + 1, derive_stream_id(p.stream_id, i)});
    }
    if (stack.size() > population_cap) {
      result.failed = true;
      return result;
    }
  }
  return result;
}

}  // namespace

void SimCaps::validate() const {
  if (max_depth < 1) throw InvalidSpec("max_depth must be at least 1");
  if (m_proxy_horizon < 1 || m_proxy_horizon >= max_depth) {
    throw InvalidSpec("m_proxy_horizon must satisfy 1 <= N0 < N");
  }
  if (population_cap < 1) throw InvalidSpec("population_cap must be at least 1");
  if (!(weight_floor >= 0.0)) throw InvalidSpec("weight_floor must be >= 0");
}

Trajectory simulate_trajectory(const Model& model, const SimCaps& caps, const RandomStream& rng) {
  Trajectory traj;
  traj.w.assign(static_cast<std::size_t>(caps.max_depth) + 1, 0.0);
  const WalkResult walk =
      walk_tree(model, rng, caps.max_depth, caps.weight_floor, caps.population_cap,
                [&](int depth, double weight) { traj.w[static_cast<std::size_t>(depth)] += weight; });
  traj.pruned_mass = walk.pruned_mass;
  traj.failed = walk.failed;
  traj.d.resize(static_cast<std::size_t>(caps.max_depth));
  for (std::size_t k = 1; k < traj.w.size(); ++k) traj.d[k - 1] = traj.w[k] - traj.w[k - 1];
  return traj;
}

Functionals functionals(const Trajectory& traj, int m_proxy_horizon) {
  if (traj.failed) throw FailedTrajectory("functionals of a failed trajectory are undefined");
  const auto& w = traj.w;
  const std::size_t n = w.size() - 1;
  if (m_proxy_horizon < 0 || static_cast<std::size_t>(m_proxy_horizon) > n) {
    throw InvalidSpec("m_proxy_horizon exceeds trajectory depth");
  }
  Functionals f;
  f.w_star = *std::max_element(w.begin(), w.end());
  double sum_sq = 1.0;
  for (double dk : traj.d) {
    sum_sq += dk * dk;
    f.delta = std::max(f.delta, std::abs(dk));
  }
  f.s = std::sqrt(sum_sq);
  f.w_limit_proxy = w[n];

  const auto horizon = static_cast<std::size_t>(m_proxy_horizon);
  for (std::size_t k = 0; k <= horizon; ++k) {
    f.m_proxy = std::max(f.m_proxy, std::abs(w[n] - w[k]));
  }
  // Suffix maxima: sup_from[k] = max(w[k..n]).
  std::vector<double> suffix(w.size());
  suffix[n] = w[n];
  for (std::size_t k = n; k-- > 0;) suffix[k] = std::max(w[k], suffix[k + 1]);
  f.sup_from.assign(suffix.begin(), suffix.begin() + static_cast<std::ptrdiff_t>(horizon) + 1);
  return f;
}

MomentEstimate generation_moment(const Model& model, int n, double x, std::size_t reps,
                                 const RandomStream& rng) {
  if (n < 1) throw InvalidSpec("generation_moment needs n >= 1");
  if (reps < 2) throw InsufficientSample("generation_moment needs at least 2 replicates");
  model.k_exponent(x);  // domain check

  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    double value = 0.0;
    walk_tree(model, rng.split(i), n, 0.0, static_cast<std::size_t>(-1),
              [&](int depth, double weight) {
                if (depth == n) value += std::pow(weight, x);
              });
    // Welford
    const double delta = value - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (value - mean);
  }
  const double var = m2 / static_cast<double>(reps - 1);
  return {mean, std::sqrt(var / static_cast<double>(reps)), reps};
}

TrajectoryBatch simulate_batch(const Model& model, const SimCaps& caps, std::size_t reps,
                               std::uint64_t seed, const BatchOptions& options) {
  caps.validate();
  for (int order : options.sup_orders) {
    if (order < 0 || order > caps.m_proxy_horizon) {
      throw InvalidSpec("sup_from order must lie in [0, N0]");
    }
  }
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  TrajectoryBatch b;
  for (auto* col : {&b.w1, &b.w_n, &b.w_star, &b.s, &b.delta, &b.m_proxy, &b.pruned_mass}) {
    col->assign(reps, kNaN);
  }
  b.sup_orders = options.sup_orders;
  b.sup_from.assign(options.sup_orders.size(), std::vector<double>(reps, kNaN));
  b.sup_increment.assign(options.sup_orders.size(), std::vector<double>(reps, kNaN));
  if (options.keep_path) {
    b.w_path.assign(static_cast<std::size_t>(caps.max_depth) + 1, std::vector<double>(reps, kNaN));
  }
  b.failed.assign(reps, 0);
  std::vector<std::uint8_t> violation(reps, 0);
  std::vector<double> recon_error(reps, 0.0);

  parallel_for(reps, options.threads, [&](std::size_t i) {
    const Trajectory traj = simulate_trajectory(model, caps, stream_rng(seed, i));
    b.pruned_mass[i] = traj.pruned_mass;
    if (traj.failed) {
      b.failed[i] = 1;
      return;
    }
    const Functionals f = functionals(traj, caps.m_proxy_horizon);
    b.w1[i] = traj.w[1];
    b.w_n[i] = f.w_limit_proxy;
    b.w_star[i] = f.w_star;
    b.s[i] = f.s;
    b.delta[i] = f.delta;
    b.m_proxy[i] = f.m_proxy;
    for (std::size_t j = 0; j < b.sup_orders.size(); ++j) {
      const auto n = static_cast<std::size_t>(b.sup_orders[j]);
      b.sup_from[j][i] = f.sup_from[n];
      double incr = 0.0;
      for (std::size_t m = n + 1; m < traj.w.size(); ++m) {
        incr = std::max(incr, std::abs(traj.w[m] - traj.w[n]));
      }
      b.sup_increment[j][i] = incr;
    }
    if (options.keep_path) {
      for (std::size_t k = 0; k < traj.w.size(); ++k) b.w_path[k][i] = traj.w[k];
    }

    bool ok = traj.w[0] == 1.0;
    double partial = 1.0;
    double worst = 0.0;
    for (std::size_t k = 1; k < traj.w.size(); ++k) {
      partial += traj.d[k - 1];
      const double err = std::abs(traj.w[k] - partial) / std::max(traj.w[k], 1.0);
      worst = std::max(worst, err);
      ok = ok && traj.w[k] >= 0.0;
    }
    ok = ok && worst <= 0x1.0p-40;
    ok = ok && f.s >= f.delta && f.w_star >= f.w_limit_proxy && f.m_proxy <= f.w_star &&
         f.w_star >= 1.0 && f.s >= 1.0;
    violation[i] = ok ? 0 : 1;
    recon_error[i] = worst;
  });

  for (std::size_t i = 0; i < reps; ++i) {
    b.failed_count += b.failed[i];
    b.pathwise_violations += violation[i];
    b.max_reconstruction_error = std::max(b.max_reconstruction_error, recon_error[i]);
  }
  return b;
}

}  // namespace brw
