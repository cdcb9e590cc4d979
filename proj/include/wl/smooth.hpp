#pragma once

#include <cmath>
#include <functional>

namespace wl {

/// e^{-1/t} glue, extended by 0 for t <= 0.
inline double glue(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

/// C^infinity step: 0 for t <= 0, 1 for t >= 1, strictly monotone between.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = glue(t);
  const double b = glue(1.0 - t);
  return a / (a + b);
}

/// Even cutoff profile: 1 on [-inner,inner], 0 outside [-outer,outer].
inline double plateau_cutoff(double t, double inner, double outer) {
  const double a = std::abs(t);
  if (a <= inner) return 1.0;
  if (a >= outer) return 0.0;
  return smooth_step((outer - a) / (outer - inner));
}

namespace detail {

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol) {
    return left + right + err / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature on [a, b] to relative tolerance rel_tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double rel_tol = 1e-12) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = detail::simpson(a, b, fa, fm, fb);
  const double scale = std::max({std::abs(whole), std::abs(b - a) * std::abs(fm), 1e-300});
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, 48);
}

}  // namespace wl
