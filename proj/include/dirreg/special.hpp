// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_SPECIAL_HPP
#define DIRREG_SPECIAL_HPP

#include <cmath>
#include <cstddef>

#include "dirreg/errors.hpp"

namespace dirreg {

namespace detail {

// Lanczos approximation, g = 607/128, 15 terms (Godfrey's coefficient set).
// Good to ~1e-15 relative over the positive axis once arguments below 0.5
// are lifted through the recurrence.
inline double lanczos_sum(double x) {
  static const double c[15] = {
      0.99999999999999709182,     57.156235665862923517,
      -59.597960355475491248,     14.136097974741747174,
      -0.49191381609762019978,    0.33994649984811888699e-4,
      0.46523628927048575665e-4,  -0.98374475304879564677e-4,
      0.15808870322491248884e-3,  -0.21026444172410488319e-3,
      0.21743961811521264320e-3,  -0.16431810653676389022e-3,
      0.84418223983852743293e-4,  -0.26190838401581408670e-4,
      0.36899182659531622704e-5};
  double sum = c[0];
  for (int k = 1; k < 15; ++k) sum += c[k] / (x + k - 1);
  return sum;
}

constexpr double kLanczosG = 4.7421875;           // 607/128
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double lgamma_core(double x) {
  const double t = x + kLanczosG - 0.5;
  return (x - 0.5) * std::log(t) - t + kLogSqrt2Pi + std::log(lanczos_sum(x));
}

}  // namespace detail

// log Gamma(x) for x > 0.
inline double lgamma(double x) {
  require(std::isfinite(x) && x > 0.0, "NonPositiveArgument",
          "lgamma requires x > 0, got " + std::to_string(x));
  if (x < 0.5) return detail::lgamma_core(x + 1.0) - std::log(x);
  return detail::lgamma_core(x);
}

// psi(x) = d/dx log Gamma(x) for x > 0.  Recurrence lifts the argument to
// >= 10, then the Bernoulli asymptotic series applies.
inline double digamma(double x) {
  require(std::isfinite(x) && x > 0.0, "NonPositiveArgument",
          "digamma requires x > 0, got " + std::to_string(x));
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B_2/2 x^-2, B_4/4 x^-4, ... through x^-14
  const double series =
      inv2 * (1.0 / 12.0 +
              inv2 * (-1.0 / 120.0 +
                      inv2 * (1.0 / 252.0 +
                              inv2 * (-1.0 / 240.0 +
                                      inv2 * (1.0 / 132.0 +
                                              inv2 * (-691.0 / 32760.0 +
                                                      inv2 * (1.0 / 12.0)))))));
  return result + std::log(x) - 0.5 * inv - series;
}

// Inverse standard-normal CDF, Wichura's AS 241 (PPND16), ~1e-15 accurate.
inline double std_normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "InvalidProbability",
          "quantile requires p in (0,1), got " + std::to_string(p));
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -value : value;
}

}  // namespace dirreg

#endif  // DIRREG_SPECIAL_HPP
