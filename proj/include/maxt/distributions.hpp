#pragma once

#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "maxt/errors.hpp"

namespace maxt {

inline constexpr double kInfiniteDf = std::numeric_limits<double>::infinity();

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Survival function 1 - Phi(x), accurate in the upper tail.
inline double norm_sf(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Wichura's AS 241 (PPND16) inverse normal, good to ~1e-15 over (0,1).
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("norm_quantile: p outside [0, 1]");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) *
                    r +
                45921.953931549871457) *
                   r +
               13731.693765509461125) *
                  r +
              1971.5909503065514427) *
                 r +
             133.14166789178437745) *
                r +
            3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                 39307.89580009271061) *
                    r +
                21213.794301586595867) *
                   r +
               5394.1960214247511077) *
                  r +
              687.1870074920579083) *
                 r +
             42.313330701600911252) *
                r +
            1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
              0.24178072517745061177) *
                 r +
             1.27045825245236838258) *
                r +
            3.64784832476320460504) *
               r +
           5.7694972214606914055) *
              r +
          4.6303378461565452959) *
             r +
         1.42343711074968357734) /
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
              0.0151986665636164571966) *
                 r +
             0.14810397642748007459) *
                r +
            0.68976733498510000455) *
               r +
           1.6763848301838038494) *
              r +
          2.05319162663775882187) *
             r +
         1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              0.0012426609473880784386) *
                 r +
             0.026532189526576123093) *
                r +
            0.29656057182850489123) *
               r +
           1.7848265399172913358) *
              r +
          5.4637849111641143699) *
             r +
         6.6579046435011037772) /
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
              1.8463183175100546818e-5) *
                 r +
             7.868691311456132591e-4) *
                r +
            0.0148753612908506148525) *
               r +
           0.13692988092273580531) *
              r +
          0.59983220655588793769) *
             r +
         1.0);
  }
  return (q < 0.0) ? -x : x;
}

namespace detail {
inline void check_df(double df) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be > 0");
}
}  // namespace detail

inline double t_cdf(double x, double df) {
  detail::check_df(df);
  if (std::isinf(df)) return norm_cdf(x);
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t(df), x);
}

// Survival function P(T > x), accurate for large x.
inline double t_sf(double x, double df) {
  detail::check_df(df);
  if (std::isinf(df)) return norm_sf(x);
  if (std::isinf(x)) return x > 0 ? 0.0 : 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::students_t(df), x));
}

inline double t_quantile(double p, double df) {
  detail::check_df(df);
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("t_quantile: p must be in (0, 1)");
  if (std::isinf(df)) return norm_quantile(p);
  return boost::math::quantile(boost::math::students_t(df), p);
}

// Quantile of S = chi_df / sqrt(df), the scale mixing variable of the
// central multivariate t.
inline double chi_scale_quantile(double u, double df) {
  detail::check_df(df);
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(boost::math::quantile(boost::math::chi_squared(df), u) / df);
}

}  // namespace maxt
