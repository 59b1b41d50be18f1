#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "brw/models.hpp"
#include "brw/random.hpp"

namespace brw {

struct SimCaps {
  int max_depth = 12;                     // N
  std::size_t population_cap = 1000000;   // max pending particles in the walk
  double weight_floor = 0.0;              // prune subtrees below this root weight
  int m_proxy_horizon = 6;                // N0 < N

  void validate() const;
};

/// One replicate's martingale path W_0..W_N.
struct Trajectory {
  std::vector<double> w;  // W_0 .. W_N (partial when failed)
  std::vector<double> d;  // d_k = W_k - W_{k-1}
  // Sum of root weights of pruned subtrees; each pruned subtree's expected
  // contribution to every later W_k equals its root weight.
  double pruned_mass = 0.0;
  bool failed = false;    // population cap hit
};

struct Functionals {
  double w_star = 0.0;         // max_k W_k
  double s = 0.0;              // (1 + sum d_k^2)^{1/2}
  double delta = 0.0;          // max_k |d_k|
  double w_limit_proxy = 0.0;  // W_N
  double m_proxy = 0.0;        // max_{n <= N0} |W_N - W_n|
  std::vector<double> sup_from;  // sup_{n <= m <= N} W_m for n = 0..N0
};

/// Depth-first evaluation of W_1..W_N via W_{n+1} = sum_{|u|=n} Y_u W_1^{(u)}.
/// The tree is never stored. Each particle draws its offspring from its own
/// stream, derived from the root stream by child index, so pruning a subtree
/// leaves every other particle's randomness untouched.
Trajectory simulate_trajectory(const Model& model, const SimCaps& caps, const RandomStream& rng);

/// Throws FailedTrajectory if traj.failed.
Functionals functionals(const Trajectory& traj, int m_proxy_horizon);

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
};

/// Monte Carlo estimate of E sum_{|u|=n} Y_u^x (expected value k_x^n).
/// Replicate i uses rng.split(i).
MomentEstimate generation_moment(const Model& model, int n, double x, std::size_t reps,
                                 const RandomStream& rng);

/// Column store for many replicates. Functional columns of failed
/// replicates hold NaN.
struct TrajectoryBatch {
  std::vector<double> w1;
  std::vector<double> w_n;
  std::vector<double> w_star;
  std::vector<double> s;
  std::vector<double> delta;
  std::vector<double> m_proxy;
  std::vector<double> pruned_mass;
  std::vector<int> sup_orders;               // n for each sup_from column
  std::vector<std::vector<double>> sup_from; // sup_{m >= n} W_m, one column per order
  std::vector<std::vector<double>> sup_increment;  // sup_{m >= n} |W_m - W_n|, same orders
  std::vector<std::vector<double>> w_path;   // W_k columns, k = 0..N (if kept)
  std::vector<std::uint8_t> failed;

  std::size_t failed_count = 0;
  // Replicates breaking any pathwise identity or ordering (reconstruction
  // W_k = 1 + sum d_j, S >= Delta, W* >= W_N, M-proxy <= W*, W* >= 1, S >= 1).
  std::size_t pathwise_violations = 0;
  double max_reconstruction_error = 0.0;

  std::size_t size() const { return failed.size(); }
};

struct BatchOptions {
  std::vector<int> sup_orders{1, 2};
  bool keep_path = false;
  unsigned threads = 1;
};

/// Replicate i consumes stream_rng(seed, i), so results do not depend on the
/// number of threads.
TrajectoryBatch simulate_batch(const Model& model, const SimCaps& caps, std::size_t reps,
                               std::uint64_t seed, const BatchOptions& options);

}  // namespace brw
