#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "wl/lattice.hpp"
#include "wl/potential.hpp"
#include "wl/types.hpp"

namespace wl {

enum class OperatorKind { Witten, NegGenerator, Schrodinger };

/// Sparse symmetric (or rho-symmetric) nearest-neighbor operator on a box,
/// Dirichlet truncation: couplings leaving the box are dropped, the diagonal
/// keeps its full infinite-lattice value.
struct SparseOperator {
  OperatorKind kind = OperatorKind::Witten;
  double eps = 0.0;
  int dim = 0;
  Vector diag;
  SparseMatrix offdiag;  // structurally symmetric; entries stored per directed edge

  Index size() const { return diag.size(); }
  Vector apply(const Vector& v) const;
  SparseMatrix matrix() const;  // diag + offdiag
  double max_abs_diag() const { return diag.cwiseAbs().maxCoeff(); }

  /// Coordinate-list dump "i j value", 17 significant digits, sorted by (i, j).
  void dump_coordinate(std::ostream& os) const;
};

/// V_eps(x) = sum_{v in N} [exp(-grad_eps f(x,v)/2) - 1]; exponents are clamped
/// at +-700 with a warning.
double potential_term(const Potential& p, const Vector& x, double eps,
                      Warnings* warnings = nullptr);

SparseOperator assemble_witten(const Potential& p, const LatticeBox& box,
                               Warnings* warnings = nullptr);
SparseOperator assemble_neg_generator(const Potential& p, const LatticeBox& box,
                                      Warnings* warnings = nullptr);
/// Generic Schroedinger operator -eps^2 Delta_eps + U for a user potential U.
SparseOperator assemble_schrodinger(const LatticeBox& box,
                                    const std::function<double(const Vector&)>& U,
                                    double eps);

/// exp(-f/2eps) sampled on the box; underflowed entries are set to 0 and flagged.
Vector ground_state_weight(const Potential& p, const LatticeBox& box, double eps,
                           Warnings* warnings = nullptr);

enum class GstDirection { Forward, Inverse };

/// Multiplication by exp(-f/2eps) (forward) or its inverse.
Vector ground_state_transform(const Potential& p, const LatticeBox& box, double eps,
                              const Vector& psi, GstDirection direction,
                              Warnings* warnings = nullptr);

/// Entrywise symmetrization Phi (-eps L) Phi^{-1} of the generator, computed
/// per edge from f-differences so the weights never underflow. Returns the
/// full matrix (diagonal included).
SparseMatrix symmetrized_generator(const SparseOperator& gen, const Potential& p,
                                   const LatticeBox& box);

/// Quadratic-form identity side: || grad_{f,eps} psi ||^2 with the 1-form norm
/// (psi extended by zero outside the box).
double weighted_gradient_form(const Potential& p, const LatticeBox& box, double eps,
                              const Vector& psi, Warnings* warnings = nullptr);

/// Smooth quadratic partition of unity: sum_j chi_j^2 == 1.
struct QuadraticPartition {
  std::vector<std::function<double(const Vector&)>> members;
  double hess_sup = 0.0;  // max_j sup |Hess chi_j|
};

/// Two-piece 1D partition from the smooth-step glue; transition on [a, b].
QuadraticPartition two_piece_partition_1d(double a, double b);

/// Throws ConfigInvalid unless sum_j chi_j(x)^2 == 1 within 1e-12 at every site.
void validate_partition(const LatticeBox& box, const QuadraticPartition& partition);

/// || Delta_eps psi - sum_j chi_j Delta_eps(chi_j psi) ||_{ell^2(eps Z^d)}.
double ims_defect(const LatticeBox& box, const QuadraticPartition& partition,
                  const Vector& psi);

}  // namespace wl
