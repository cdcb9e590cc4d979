#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wl/landscape.hpp"
#include "wl/operators.hpp"
#include "wl/types.hpp"

namespace wl {

struct SpectrumResult {
  std::vector<double> eigenvalues;      // ascending
  std::vector<double> residuals;        // ||A psi - lambda psi|| / ||psi|| (diagnostic)
  std::vector<double> inverse_residuals;  // certified relative residuals of the
                                          // shift-inverted operator (convergence side)
  Matrix eigenvectors;                  // one column per pair, unit ell^2 norm
  int iterations = 0;
  double eps = 0.0;
  double tol = 0.0;
  double shift = 0.0;
};

/// k smallest eigenpairs of a symmetric nearest-neighbor operator, restricted
/// to the orthocomplement of the deflation space. Shift-invert Lanczos with
/// full reorthogonalization on a sparse LDLT of (A + delta I); tol bounds the
/// relative Lanczos residual of the inverted operator.
SpectrumResult lowest_eigenpairs(const SparseOperator& op, int k, double tol = 1e-10,
                                 const std::vector<Vector>& deflate = {},
                                 std::uint64_t seed = 0x5EED5EED);

struct GapReport {
  int n_small = 0;
  double threshold = 0.0;
  double lambda_small = 0.0;  // the n_small-th eigenvalue
  double lambda_next = 0.0;   // the (n_small+1)-th
  double ratio_to_prediction = std::numeric_limits<double>::quiet_NaN();
  bool separated = false;
};

/// Default counting threshold: eps * (1/2) * min over minima of sum_j sqrt(kappa_j),
/// kappa_j the eigenvalues of (1/2) Hess f(m) — half the smallest harmonic
/// ground-state energy.
double small_cluster_threshold(const std::vector<CriticalPoint>& minima, double eps);

/// Counts eigenvalues <= threshold. Throws NotSeparated when an eigenvalue
/// falls within 10% of the threshold. If predicted_gap > 0, fills
/// ratio_to_prediction = lambda_2 / predicted_gap.
GapReport count_small_eigenvalues(const SpectrumResult& spectrum, double threshold,
                                  double predicted_gap = 0.0);

struct HarmonicReference {
  double lambda0_pred = 0.0;
  double lambda1_pred = 0.0;
  double lambda0_num = 0.0;
  double lambda1_num = 0.0;
};

/// Discrete semiclassical harmonic oscillator -eps^2 Delta_eps + <x-c, M (x-c)>
/// centered at the box center; predictions lambda0 = sum_j sqrt(kappa_j),
/// lambda1 = lambda0 + 2 min_j sqrt(kappa_j) in units of eps.
HarmonicReference harmonic_reference(const Matrix& M, double eps, const LatticeBox& box,
                                     double tol = 1e-10);

struct RateFit {
  double E_fit = 0.0;
  double A_fit = 0.0;
  std::vector<double> residuals;  // per-point residuals of ln lambda2
};

/// Least-squares fit of ln(lambda2) = ln(eps) + ln(A) - E/eps over a sweep.
RateFit exponential_rate_fit(const std::vector<std::pair<double, double>>& sweep);

}  // namespace wl
