#include "wl/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <utility>

#include "wl/smooth.hpp"

namespace wl {

namespace {

constexpr double kExpClamp = 700.0;

double clamped_exp(double arg, Warnings* warnings, const char* what) {
  if (std::abs(arg) > kExpClamp) {
    warn(warnings, std::string("OverflowWarning: exponent clamped in ") + what);
    arg = std::clamp(arg, -kExpClamp, kExpClamp);
  }
  return std::exp(arg);
}

}  // namespace

Vector SparseOperator::apply(const Vector& v) const {
  if (v.size() != size()) throw ShapeMismatch("SparseOperator::apply: length mismatch");
  return diag.cwiseProduct(v) + offdiag * v;
}

SparseMatrix SparseOperator::matrix() const {
  SparseMatrix m = offdiag;
  SparseMatrix d(size(), size());
  d.reserve(Eigen::VectorXi::Constant(static_cast<int>(size()), 1));
  for (Index i = 0; i < size(); ++i) d.insert(i, i) = diag[i];
  d.makeCompressed();
  return m + d;
}

void SparseOperator::dump_coordinate(std::ostream& os) const {
  std::map<std::pair<Index, Index>, double> entries;
  for (Index i = 0; i < size(); ++i) entries[{i, i}] = diag[i];
  for (int k = 0; k < offdiag.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(offdiag, k); it; ++it)
      entries[{it.row(), it.col()}] = it.value();
  char buf[64];
  for (const auto& [ij, value] : entries) {
    std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n",
                  static_cast<long long>(ij.first), static_cast<long long>(ij.second),
                  value);
    os << buf;
  }
}

double potential_term(const Potential& p, const Vector& x, double eps,
                      Warnings* warnings) {
  const double fx = p.eval(x);
  double v = 0.0;
  Vector y = x;
  for (int axis = 0; axis < p.dim; ++axis) {
    for (int dir = -1; dir <= 1; dir += 2) {
      y[axis] = x[axis] + dir * eps;
      const double grad_f = (p.eval(y) - fx) / eps;
      v += clamped_exp(-0.5 * grad_f, warnings, "potential_term") - 1.0;
      y[axis] = x[axis];
    }
  }
  return v;
}

namespace {

template <typename EdgeWeight>
SparseOperator assemble_nearest_neighbor(const LatticeBox& box, OperatorKind kind,
                                         const std::function<double(Index)>& diagonal,
                                         EdgeWeight edge_weight) {
  SparseOperator op;
  op.kind = kind;
  op.eps = box.eps();
  op.dim = box.dim();
  const Index n = box.size();
  op.diag.resize(n);
  for (Index i = 0; i < n; ++i) op.diag[i] = diagonal(i);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * box.dim() * n));
  for (Index i = 0; i < n; ++i) {
    for (int axis = 0; axis < box.dim(); ++axis) {
      const Index j = box.neighbor(i, axis, +1);
      if (j < 0) continue;
      auto [w_ij, w_ji] = edge_weight(i, j, axis);
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), w_ij);
      triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), w_ji);
    }
  }
  op.offdiag.resize(n, n);
  op.offdiag.setFromTriplets(triplets.begin(), triplets.end());
  op.offdiag.makeCompressed();
  return op;
}

}  // namespace

SparseOperator assemble_witten(const Potential& p, const LatticeBox& box,
                               Warnings* warnings) {
  const double two_d = 2.0 * box.dim();
  return assemble_nearest_neighbor(
      box, OperatorKind::Witten,
      [&](Index i) { return potential_term(p, box.site(i), box.eps(), warnings) + two_d; },
      [&](Index, Index, int) { return std::pair<double, double>{-1.0, -1.0}; });
}

SparseOperator assemble_neg_generator(const Potential& p, const LatticeBox& box,
                                      Warnings* warnings) {
  const double eps = box.eps();
  // Diagonal keeps all 2d outgoing rates (neighbors outside the box included);
  // off-diagonal entries exist only for in-box edges. eps * r = exp(-df/2eps).
  auto diagonal = [&](Index i) {
    const Vector x = box.site(i);
    const double fx = p.eval(x);
    double total = 0.0;
    Vector y = x;
    for (int axis = 0; axis < box.dim(); ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        y[axis] = x[axis] + dir * eps;
        total += clamped_exp(-(p.eval(y) - fx) / (2.0 * eps), warnings,
                             "assemble_neg_generator");
        y[axis] = x[axis];
      }
    }
    return total;
  };
  auto edge = [&](Index i, Index j, int) {
    const double fi = p.eval(box.site(i));
    const double fj = p.eval(box.site(j));
    const double w_ij = -clamped_exp(-(fj - fi) / (2.0 * eps), warnings,
                                     "assemble_neg_generator");
    const double w_ji = -clamped_exp(-(fi - fj) / (2.0 * eps), warnings,
                                     "assemble_neg_generator");
    return std::pair<double, double>{w_ij, w_ji};
  };
  return assemble_nearest_neighbor(box, OperatorKind::NegGenerator, diagonal, edge);
}

SparseOperator assemble_schrodinger(const LatticeBox& box,
                                    const std::function<double(const Vector&)>& U,
                                    double eps) {
  if (eps != box.eps())
    throw InvalidInput("assemble_schrodinger: eps differs from the box spacing");
  const double two_d = 2.0 * box.dim();
  return assemble_nearest_neighbor(
      box, OperatorKind::Schrodinger,
      [&](Index i) { return U(box.site(i)) + two_d; },
      [&](Index, Index, int) { return std::pair<double, double>{-1.0, -1.0}; });
}

Vector ground_state_weight(const Potential& p, const LatticeBox& box, double eps,
                           Warnings* warnings) {
  const Index n = box.size();
  Vector w(n);
  bool underflow = false;
  for (Index i = 0; i < n; ++i) {
    const double arg = -p.eval(box.site(i)) / (2.0 * eps);
    if (arg < -745.0) {
      w[i] = 0.0;
      underflow = true;
    } else {
      w[i] = std::exp(arg);
    }
  }
  if (underflow)
    warn(warnings, "UnderflowWarning: exp(-f/2eps) underflowed at some sites (set to 0)");
  return w;
}

Vector ground_state_transform(const Potential& p, const LatticeBox& box, double eps,
                              const Vector& psi, GstDirection direction,
                              Warnings* warnings) {
  if (psi.size() != box.size())
    throw ShapeMismatch("ground_state_transform: length mismatch");
  const Vector w = ground_state_weight(p, box, eps, warnings);
  Vector out(psi.size());
  bool divide_by_zero = false;
  for (Index i = 0; i < psi.size(); ++i) {
    if (direction == GstDirection::Forward) {
      out[i] = w[i] * psi[i];
    } else if (w[i] == 0.0) {
      out[i] = 0.0;
      divide_by_zero = true;
    } else {
      out[i] = psi[i] / w[i];
    }
  }
  if (divide_by_zero)
    warn(warnings, "UnderflowWarning: inverse transform hit underflowed weights");
  return out;
}

SparseMatrix symmetrized_generator(const SparseOperator& gen, const Potential& p,
                                   const LatticeBox& box) {
  if (gen.kind != OperatorKind::NegGenerator)
    throw InvalidInput("symmetrized_generator: operator is not a generator");
  const double eps = gen.eps;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int k = 0; k < gen.offdiag.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(gen.offdiag, k); it; ++it) {
      const double fi = p.eval(box.site(it.row()));
      const double fj = p.eval(box.site(it.col()));
      // S_xy = e^{-f(x)/2eps} (-eps L)_xy e^{+f(y)/2eps}
      const double w = it.value() * std::exp((fj - fi) / (2.0 * eps));
      triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), w);
    }
  }
  for (Index i = 0; i < gen.size(); ++i)
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), gen.diag[i]);
  SparseMatrix s(gen.size(), gen.size());
  s.setFromTriplets(triplets.begin(), triplets.end());
  s.makeCompressed();
  return s;
}

double weighted_gradient_form(const Potential& p, const LatticeBox& box, double eps,
                              const Vector& psi, Warnings* warnings) {
  if (psi.size() != box.size())
    throw ShapeMismatch("weighted_gradient_form: length mismatch");
  double sum = 0.0;
  Vector y(box.dim());
  for (Index i = 0; i < box.size(); ++i) {
    const Vector x = box.site(i);
    const double fx = p.eval(x);
    for (int axis = 0; axis < box.dim(); ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const Index j = box.neighbor(i, axis, dir);
        // g = (f(x+eps v) - f(x)) / (4 eps); each undirected in-box edge is
        // visited twice, matching the 1/2 of the 1-form norm; boundary edges
        // count once from each side of the (zero-extended) lattice sum.
        y = x;
        y[axis] += dir * eps;
        const double g = (p.eval(y) - fx) / (4.0 * eps);
        const double outer = psi[i] * clamped_exp(-g, warnings, "weighted_gradient_form");
        if (j >= 0) {
          const double inner = psi[j] * clamped_exp(g, warnings, "weighted_gradient_form");
          const double term = inner - outer;
          sum += 0.5 * term * term;
        } else {
          sum += outer * outer;  // both orientations of the crossing edge
        }
      }
    }
  }
  return box.cell_measure() * sum;
}

QuadraticPartition two_piece_partition_1d(double a, double b) {
  if (!(b > a)) throw InvalidInput("two_piece_partition_1d: requires a < b");
  auto s = [a, b](double x) { return smooth_step((x - a) / (b - a)); };
  QuadraticPartition part;
  part.members.push_back([s](const Vector& x) { return std::sqrt(1.0 - s(x[0]) * s(x[0])); });
  part.members.push_back([s](const Vector& x) { return s(x[0]); });
  // sup |chi''| for this glue profile, measured once on a fine grid.
  double sup = 0.0;
  const int n = 4000;
  const double h = (b - a) / n;
  for (auto& chi : part.members) {
    for (int i = 1; i < n; ++i) {
      Vector xm(1), x0(1), xp(1);
      x0[0] = a + i * (b - a) / n;
      xm[0] = x0[0] - h;
      xp[0] = x0[0] + h;
      const double dd = (chi(xp) - 2.0 * chi(x0) + chi(xm)) / (h * h);
      sup = std::max(sup, std::abs(dd));
    }
  }
  part.hess_sup = sup;
  return part;
}

void validate_partition(const LatticeBox& box, const QuadraticPartition& partition) {
  for (Index i = 0; i < box.size(); ++i) {
    const Vector x = box.site(i);
    double s = 0.0;
    for (const auto& chi : partition.members) {
      const double c = chi(x);
      s += c * c;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw ConfigInvalid("partition of unity violated: sum chi^2 = " + std::to_string(s));
  }
}

namespace {

/// Dirichlet discrete Laplacian: values outside the box are treated as zero,
/// the diagonal keeps the full 2d.
Vector dirichlet_laplacian(const LatticeBox& box, const Vector& psi) {
  const double inv_eps2 = 1.0 / (box.eps() * box.eps());
  Vector out(box.size());
  for (Index i = 0; i < box.size(); ++i) {
    double acc = -2.0 * box.dim() * psi[i];
    for (int axis = 0; axis < box.dim(); ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const Index j = box.neighbor(i, axis, dir);
        if (j >= 0) acc += psi[j];
      }
    }
    out[i] = inv_eps2 * acc;
  }
  return out;
}

}  // namespace

double ims_defect(const LatticeBox& box, const QuadraticPartition& partition,
                  const Vector& psi) {
  if (psi.size() != box.size()) throw ShapeMismatch("ims_defect: length mismatch");
  Vector defect = dirichlet_laplacian(box, psi);
  for (const auto& chi : partition.members) {
    Vector chi_on_box(box.size());
    for (Index i = 0; i < box.size(); ++i) chi_on_box[i] = chi(box.site(i));
    const Vector lap = dirichlet_laplacian(box, chi_on_box.cwiseProduct(psi));
    defect -= chi_on_box.cwiseProduct(lap);
  }
  return lattice_norm(box, defect);
}

}  // namespace wl
