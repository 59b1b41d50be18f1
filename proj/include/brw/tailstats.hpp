#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace brw {

/// P{X > x} on a threshold grid (strict inequality throughout).
struct SurvivalCurve {
  std::vector<double> thresholds;
  std::vector<double> survival;
  std::vector<double> se;  // sqrt(p (1 - p) / n)
  std::size_t n = 0;
};

SurvivalCurve empirical_survival(std::span<const double> samples,
                                 std::span<const double> thresholds);

struct HillEstimate {
  double estimate = 0.0;
  double se = 0.0;  // estimate / sqrt(k)
  std::size_t order_k = 0;
};

/// k / sum_{i=1}^{k} log(X_(n-i+1) / X_(n-k)) over descending order statistics.
HillEstimate hill_estimate(std::span<const double> samples, std::size_t order_k);

struct RatioPoint {
  double level = 0.0;      // requested reference tail probability
  double threshold = 0.0;  // reference upper quantile at `level`
  double ref_survival = 0.0;
  double num_survival = 0.0;
  double ratio = 0.0;      // num_survival / ref_survival
  double se = 0.0;         // delta method
  std::size_t ref_exceedances = 0;
};

/// Minimum reference exceedances for a level to be admissible.
inline constexpr std::size_t kMinExceedances = 100;

/// P^_num{X > x} / P^_ref{X > x} at x = the reference upper quantile for each
/// level. Throws LevelTooDeep when fewer than 100 reference points exceed x.
std::vector<RatioPoint> tail_ratio(std::span<const double> num_samples,
                                   std::span<const double> ref_samples,
                                   std::span<const double> levels);

enum class TailVerdict { RegularlyVarying, SuperPolynomialDecay, Inconclusive };

std::string to_string(TailVerdict verdict);

struct RvDiagnostic {
  TailVerdict verdict = TailVerdict::Inconclusive;
  double index = 0.0;              // Hill at k = n/100
  std::vector<HillEstimate> hill;  // k = n/100, n/50, n/20
  double hill_spread = 0.0;        // (max - min) / min over the scan
  double loglog_r2 = 0.0;          // log S vs log x on the fit window
  double loglinear_r2 = 0.0;       // log S vs x on the fit window
};

/// Decision thresholds.
inline constexpr double kRvMinR2 = 0.98;
inline constexpr double kRvMaxHillSpread = 0.15;
inline constexpr double kSuperPolyMinDrift = 0.25;
inline constexpr std::size_t kRvMinSamples = 100000;

/// Classifies the upper tail. Needs n >= 1e5.
RvDiagnostic rv_diagnostic(std::span<const double> samples);

struct TailReport {
  HillEstimate hill;
  std::vector<RatioPoint> ratio_curve;
  RvDiagnostic diagnostic;
};

}  // namespace brw
