#include "brw/special.hpp"

#include <cmath>
#include <limits>

#include "brw/errors.hpp"

namespace brw {

double hurwitz_zeta(double s, double q) {
  if (!(s > 1.0) || !(q > 0.0)) {
    throw OutOfDomain("hurwitz_zeta requires s > 1 and q > 0");
  }
  // B_{2m} / (2m)!
  static constexpr double kBernoulliOverFactorial[] = {
      1.0 / 12.0,
      -1.0 / 720.0,
      1.0 / 30240.0,
      -1.0 / 1209600.0,
      1.0 / 47900160.0,
      -691.0 / 1307674368000.0,
      1.0 / 74724249600.0,
  };
  constexpr int kHead = 10;

  double sum = 0.0;
  for (int j = 0; j < kHead; ++j) sum += std::pow(q + j, -s);
  const double a = q + kHead;
  sum += std::pow(a, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(a, -s);

  // Rising factorial s(s+1)...(s+2m-2) times a^{-s-2m+1}.
  double rising = s;
  double power = std::pow(a, -s - 1.0);
  const double inv_a2 = 1.0 / (a * a);
  for (int m = 0; m < 7; ++m) {
    const double term = kBernoulliOverFactorial[m] * rising * power;
    sum += term;
    if (std::abs(term) < std::numeric_limits<double>::epsilon() * sum) break;
    rising *= (s + 2 * m + 1) * (s + 2 * m + 2);
    power *= inv_a2;
  }
  return sum;
}

}  // namespace brw
