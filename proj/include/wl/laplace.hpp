#pragma once

#include <functional>

#include "wl/errors.hpp"
#include "wl/types.hpp"

namespace wl {

/// Gaussian lattice moment sum eps^{d/2} sum_x |x-x0|^{2m} exp(-q(x-x0)/eps)
/// with q(y) = (1/2) y.Q y over eps Z^d.
struct GaussianSumSpec {
  Matrix Q;       // symmetric positive definite
  Vector x0;      // center, not necessarily a lattice point
  int m = 0;      // moment order (|.|^{2m})
  double eps = 1.0;

  void validate() const;
  int dim() const { return static_cast<int>(Q.rows()); }
};

/// Phase for general (not necessarily quadratic) Laplace sums on a delta-ball.
struct PhaseSpec {
  std::function<double(const Vector&)> phi;
  Vector x0;            // nondegenerate minimum, phi(x0) = 0
  double delta = 1.0;   // ball radius
  int smoothness_k = 3; // 3 or 4
  Matrix hess0;         // Hess phi(x0), positive definite

  void validate() const;  // phi(x0)=0, hess0 > 0, phi > 0 on sampled shell
  int dim() const { return static_cast<int>(x0.size()); }
};

/// Brute-force lattice sum over the ball |x - x0| <= radius. Throws
/// RadiusTooSmall when the outer-shell contribution is not negligible.
double gaussian_sum_direct(const GaussianSumSpec& spec, double radius);

/// Default summation radius 12 sqrt(eps / lambda_min(Q)).
double default_sum_radius(const GaussianSumSpec& spec);

struct PoissonLeading {
  double leading = 0.0;           // eps^m * integral |y|^{2m} e^{-q(y)} dy
  double correction_bound = 0.0;  // C' * exp(-gamma/eps)
};

/// Leading Poisson-summation term via closed-form Gaussian moments in the
/// eigenbasis of Q (double factorials, no quadrature).
PoissonLeading gaussian_sum_poisson(const GaussianSumSpec& spec);

/// Closed form of integral_{R^d} |y|^{2m} exp(-(1/2) y.Q y) dy.
double gaussian_moment_integral(const Matrix& Q, int m);

struct OddMomentReport {
  double value = 0.0;  // eps^{d/2} sum |x-x0|^{m_odd} e^{-q/eps}
  double bound = 0.0;  // Cauchy-Schwarz product of the two even sums
};

/// Odd-moment sum and its Cauchy-Schwarz bound; m_odd is the odd power |.|^m.
OddMomentReport odd_moment_bound(const GaussianSumSpec& spec_even_base, int m_odd);

struct LaplaceGeneralReport {
  double value = 0.0;
  double leading = 0.0;
  double rel_error = 0.0;  // value / leading - 1
};

/// Laplace sum over the delta-ball for a general C^k phase against the
/// quadratic leading term.
LaplaceGeneralReport laplace_sum_general(const PhaseSpec& phase, int m, double eps);

}  // namespace wl
