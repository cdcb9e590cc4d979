#pragma once

#include <cmath>

#include "wl/errors.hpp"
#include "wl/types.hpp"

namespace wl {

/// Truncated computational domain eps*Z^d intersected with an axis-aligned box.
/// Sites are center + eps*k with |eps*k_j| <= half_width_j, enumerated
/// lexicographically in the integer offset k.
class LatticeBox {
 public:
  LatticeBox(int dim, double eps, Vector center, Vector half_widths,
             Index max_sites = 5'000'000);

  int dim() const { return dim_; }
  double eps() const { return eps_; }
  Index size() const { return n_; }
  const Vector& center() const { return center_; }
  const Vector& half_widths() const { return half_widths_; }
  double cell_measure() const { return measure_; }  // eps^d

  /// Integer offset of site i (lexicographic decode).
  IntVector offset(Index i) const;
  /// Coordinates of site i.
  Vector site(Index i) const;
  /// Dense index of the site with integer offset k, or -1 if outside the box.
  Index index_of(const IntVector& k) const;
  /// Dense index of the neighbor site(i) + dir*eps*e_axis, or -1 if outside.
  Index neighbor(Index i, int axis, int dir) const;
  /// Nearest lattice site to an arbitrary point.
  Index nearest_site(const Vector& x) const;
  bool is_boundary(Index i) const;

 private:
  int dim_;
  double eps_;
  Vector center_, half_widths_;
  IntVector kmin_, kmax_;
  std::vector<Index> strides_;
  Index n_;
  double measure_;
};

/// ell^2(eps Z^d) scalar product: eps^d * sum_x u(x) v(x).
inline double lattice_dot(const LatticeBox& box, const Vector& u, const Vector& v) {
  if (u.size() != box.size() || v.size() != box.size())
    throw ShapeMismatch("lattice_dot: vector length != site count");
  return box.cell_measure() * u.dot(v);
}

inline double lattice_norm(const LatticeBox& box, const Vector& u) {
  return std::sqrt(lattice_dot(box, u, u));
}

}  // namespace wl
