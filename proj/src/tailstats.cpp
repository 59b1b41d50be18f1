#include "brw/tailstats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "brw/errors.hpp"

namespace brw {
namespace {

std::vector<double> sorted_copy(std::span<const double> samples) {
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  return v;
}

std::size_t count_above(const std::vector<double>& sorted, double x) {
  return static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x));
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy * sxy / (sxx * syy);
}

// Hill estimate on samples already sorted in descending order.
HillEstimate hill_descending(const std::vector<double>& desc, std::size_t k) {
  const double base = desc[k];
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(desc[i] / base);
  HillEstimate h;
  h.order_k = k;
  h.estimate = static_cast<double>(k) / sum;
  h.se = h.estimate / std::sqrt(static_cast<double>(k));
  return h;
}

}  // namespace

SurvivalCurve empirical_survival(std::span<const double> samples,
                                 std::span<const double> thresholds) {
  if (samples.empty()) throw EmptySample("empirical_survival: no samples");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw InvalidSpec("empirical_survival: thresholds must be sorted");
  }
  const auto sorted = sorted_copy(samples);
  SurvivalCurve curve;
  curve.n = sorted.size();
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  const auto n = static_cast<double>(curve.n);
  for (double x : thresholds) {
    const double p = static_cast<double>(count_above(sorted, x)) / n;
    curve.survival.push_back(p);
    curve.se.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  for (std::size_t i = 1; i < curve.survival.size(); ++i) {
    if (curve.survival[i] > curve.survival[i - 1]) {
      throw Error("empirical_survival: non-monotone curve (internal error)");
    }
  }
  return curve;
}

HillEstimate hill_estimate(std::span<const double> samples, std::size_t order_k) {
  if (order_k < 1 || order_k >= samples.size()) {
    throw InsufficientSample("hill_estimate: need 1 <= k < n");
  }
  if (std::any_of(samples.begin(), samples.end(), [](double x) { return !(x > 0.0); })) {
    throw NonPositiveSample("hill_estimate: samples must be positive");
  }
  // Only the top k + 1 order statistics matter.
  std::vector<double> v(samples.begin(), samples.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(order_k), v.end(),
                   std::greater<>());
  std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(order_k), std::greater<>());
  return hill_descending(v, order_k);
}

std::vector<RatioPoint> tail_ratio(std::span<const double> num_samples,
                                   std::span<const double> ref_samples,
                                   std::span<const double> levels) {
  if (num_samples.empty() || ref_samples.empty()) {
    throw EmptySample("tail_ratio: empty sample");
  }
  const auto num = sorted_copy(num_samples);
  const auto ref = sorted_copy(ref_samples);
  const auto n_num = static_cast<double>(num.size());
  const auto n_ref = static_cast<double>(ref.size());

  std::vector<RatioPoint> out;
  for (double level : levels) {
    if (!(level > 0.0) || !(level < 0.5)) {
      throw InvalidSpec("tail_ratio: levels must lie in (0, 1/2)");
    }
    // x is the (j+1)-th largest reference value, j = ceil(n p), so that at
    // most n p reference points exceed it.
    const auto j = static_cast<std::size_t>(std::ceil(n_ref * level));
    if (j + 1 > ref.size()) throw LevelTooDeep("tail_ratio: level beyond sample");
    RatioPoint pt;
    pt.level = level;
    pt.threshold = ref[ref.size() - 1 - j];
    pt.ref_exceedances = count_above(ref, pt.threshold);
    if (pt.ref_exceedances < kMinExceedances) {
      throw LevelTooDeep("tail_ratio: fewer than 100 reference exceedances at level " +
                         std::to_string(level));
    }
    pt.ref_survival = static_cast<double>(pt.ref_exceedances) / n_ref;
    pt.num_survival = static_cast<double>(count_above(num, pt.threshold)) / n_num;
    pt.ratio = pt.num_survival / pt.ref_survival;
    // Var(a/b) ~ Var(a)/b^2 + a^2 Var(b)/b^4 for independent binomial a, b.
    const double a = pt.num_survival;
    const double b = pt.ref_survival;
    const double var_a = a * (1.0 - a) / n_num;
    const double var_b = b * (1.0 - b) / n_ref;
    pt.se = std::sqrt(var_a / (b * b) + a * a * var_b / (b * b * b * b));
    out.push_back(pt);
  }
  return out;
}

std::string to_string(TailVerdict verdict) {
  switch (verdict) {
    case TailVerdict::RegularlyVarying: return "RegularlyVarying";
    case TailVerdict::SuperPolynomialDecay: return "SuperPolynomialDecay";
    case TailVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

RvDiagnostic rv_diagnostic(std::span<const double> samples) {
  if (samples.size() < kRvMinSamples) {
    throw InsufficientSample("rv_diagnostic: needs at least 1e5 samples");
  }
  if (std::any_of(samples.begin(), samples.end(), [](double x) { return !(x > 0.0); })) {
    throw NonPositiveSample("rv_diagnostic: samples must be positive");
  }
  std::vector<double> desc(samples.begin(), samples.end());
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const std::size_t n = desc.size();

  RvDiagnostic out;
  for (std::size_t divisor : {100, 50, 20}) out.hill.push_back(hill_descending(desc, n / divisor));
  out.index = out.hill.front().estimate;
  double lo = out.hill.front().estimate;
  double hi = lo;
  for (const auto& h : out.hill) {
    lo = std::min(lo, h.estimate);
    hi = std::max(hi, h.estimate);
  }
  out.hill_spread = (hi - lo) / lo;

  // Fit window: survival from 1e-2 down to max(1e-4, 200/n), 20 log-spaced
  // thresholds between the matching order statistics.
  const double p_hi = 1e-2;
  const double p_lo = std::max(1e-4, 200.0 / static_cast<double>(n));
  const double x_lo = desc[static_cast<std::size_t>(p_hi * static_cast<double>(n))];
  const double x_hi = desc[static_cast<std::size_t>(p_lo * static_cast<double>(n))];
  std::vector<double> asc(desc.rbegin(), desc.rend());
  std::vector<double> log_x, x_lin, log_s;
  constexpr int kGrid = 20;
  for (int i = 0; i < kGrid; ++i) {
    const double x = x_lo * std::pow(x_hi / x_lo, static_cast<double>(i) / (kGrid - 1));
    const auto above = count_above(asc, x);
    if (above == 0) continue;
    log_x.push_back(std::log(x));
    x_lin.push_back(x);
    log_s.push_back(std::log(static_cast<double>(above) / static_cast<double>(n)));
  }
  out.loglog_r2 = r_squared(log_x, log_s);
  out.loglinear_r2 = r_squared(x_lin, log_s);

  // Hill rises as k shrinks (deeper thresholds) when the tail is lighter
  // than any power.
  const bool rising = out.hill[0].estimate > out.hill[1].estimate &&
                      out.hill[1].estimate > out.hill[2].estimate;
  const double drift = out.hill[0].estimate / out.hill[2].estimate - 1.0;

  if (out.loglog_r2 >= kRvMinR2 && out.hill_spread < kRvMaxHillSpread) {
    out.verdict = TailVerdict::RegularlyVarying;
  } else if (rising && drift > kSuperPolyMinDrift && out.loglinear_r2 > out.loglog_r2) {
    out.verdict = TailVerdict::SuperPolynomialDecay;
  } else {
    out.verdict = TailVerdict::Inconclusive;
  }
  return out;
}

}  // namespace brw
