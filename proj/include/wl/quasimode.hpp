#pragma once

#include <optional>
#include <vector>

#include "wl/eigensolver.hpp"
#include "wl/landscape.hpp"
#include "wl/lattice.hpp"
#include "wl/operators.hpp"

namespace wl {

/// Tube half-width, cutoff levels and oriented saddle data for the spectral-gap
/// quasimode. chi is the even smooth plateau profile (1 on [-rho/3, rho/3],
/// 0 outside [-2rho/3, 2rho/3]); theta interpolates in the f variable between
/// the sublevels h*+rho/2 (== 1) and h*+3rho/4 (== 0).
struct QuasimodeConfig {
  double rho = 0.0;
  double h_star = 0.0;
  std::vector<SaddleData> saddles;  // tau oriented toward the m1 side
  CriticalPoint m0, m1;
  double value_tie_tol = 1e-9;

  double chi(double eta) const;    // cutoff profile
  double theta_of_f(double f) const;
};

/// Automatic rho choice: start at 0.3 * (distance from the saddles to the
/// nearest other critical point) and halve until the lattice validation of the
/// three tube conditions passes; at most 6 halvings.
QuasimodeConfig auto_quasimode_config(const Potential& p, const LatticeBox& box,
                                      const CriticalPoint& m0, const CriticalPoint& m1,
                                      const std::vector<SaddleData>& saddles,
                                      double h_star,
                                      std::optional<double> rho_override = std::nullopt);

/// Validates the three tube conditions on the lattice; throws ConfigInvalid
/// naming the violated condition.
void validate_quasimode_config(const Potential& p, const LatticeBox& box,
                               const QuasimodeConfig& cfg);

/// xi_k(x) = <x - s_k, tau_k>.
double reaction_coordinate(const SaddleData& s, const Vector& x);

struct KappaNormalization {
  double exact = 0.0;       // quadrature value of C_{k,eps}
  double asymptotic = 0.0;  // 2 sqrt(|mu| / (2 pi eps))
};
KappaNormalization kappa_normalization(const SaddleData& s, double rho, double eps);

/// The quasimode psi_eps on the lattice, exactly orthogonal to exp(-f/2eps)
/// in the box inner product.
Vector build_quasimode(const Potential& p, const LatticeBox& box,
                       const QuasimodeConfig& cfg, double eps);

struct PredictedMeasured {
  double measured = 0.0;
  double predicted = 0.0;
  double ratio() const { return measured / predicted; }
};

PredictedMeasured quasimode_norm(const LatticeBox& box, const Vector& psi,
                                 const QuasimodeConfig& cfg, double eps);
PredictedMeasured quasimode_dirichlet(const LatticeBox& box, const Vector& psi,
                                      const SparseOperator& op,
                                      const QuasimodeConfig& cfg);

struct ResidualReport {
  double measured_sq = 0.0;  // ||H psi||^2 in ell^2(eps Z^d)
  double scale = 0.0;        // eps^3 exp(-h*/eps)
};
ResidualReport quasimode_residual(const LatticeBox& box, const Vector& psi,
                                  const SparseOperator& op, const QuasimodeConfig& cfg);

/// lambda >= <Tu,u> (1 - R(u)), R(u)^2 = ||Tu||^2 / (tau <Tu,u>) for the
/// normalized u; inputs are the raw (unnormalized) quadratic quantities.
/// Clamps at zero with a QualityWarning when R >= 1.
double abstract_lower_bound(double dirichlet, double residual_sq, double norm_sq,
                            double tau, Warnings* warnings = nullptr);

struct QuasimodeReport {
  double eps = 0.0;
  double rho = 0.0;
  double norm_sq_measured = 0.0;
  double norm_sq_predicted = 0.0;
  double dirichlet_measured = 0.0;
  double dirichlet_predicted = 0.0;
  double residual_sq_measured = 0.0;
  double residual_scale = 0.0;
  double rayleigh_quotient = 0.0;
  double lower_bound = 0.0;
  double ortho_defect = 0.0;
};

QuasimodeReport evaluate_quasimode(const Potential& p, const LatticeBox& box,
                                   const QuasimodeConfig& cfg, double eps,
                                   double lower_bound_tau,
                                   Warnings* warnings = nullptr);

}  // namespace wl
