#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wl/types.hpp"

namespace wl {

/// One monomial c * prod_i x_i^{expo_i} of a polynomial landscape.
struct PolyTerm {
  std::vector<int> expo;
  double coeff = 0.0;
};

/// Energy landscape f with exact gradient and Hessian evaluators.
struct Potential {
  std::string name;
  int dim = 1;
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
  /// "builtin:<name>" or the polynomial term table that produced it.
  std::string provenance_kind;  // "builtin" | "polynomial"
  std::vector<PolyTerm> terms;  // populated for both kinds (builtins are polynomials)

  double operator()(const Vector& x) const { return eval(x); }
};

Potential make_polynomial(const std::string& name, int dim, std::vector<PolyTerm> terms);

/// Registry of built-in landscapes: double_well_1d, double_well_aniso_2d,
/// triple_well_1d, single_well_1d. `param` is the anisotropy c where it applies.
Potential builtin_potential(const std::string& name, double param = 2.0);
std::vector<std::string> builtin_potential_names();

/// JSON persistence, schema:
///   {"name": str, "dim": int, "kind": "builtin"|"polynomial",
///    "coeffs": [[[e0,...,ed-1], c], ...], "params": {"c": 2.0}}
Potential potential_from_json(const nlohmann::json& j);
nlohmann::json potential_to_json(const Potential& p);

/// Max relative mismatch between analytic grad/hess and central differences at
/// n random points in [-range, range]^d, step h = 1e-5. Used by validity checks.
struct DerivativeCheck {
  double grad_defect = 0.0;
  double hess_defect = 0.0;
};
DerivativeCheck check_derivatives(const Potential& p, double range, int n_points,
                                  std::uint64_t seed = 7);

/// Minimum of |grad f| sampled on the boundary faces of the box.
double min_boundary_gradient(const Potential& p, const Vector& center,
                             const Vector& half_widths, int samples_per_axis = 64);

}  // namespace wl
