#include "wl/quasimode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wl/smooth.hpp"
#include "wl/union_find.hpp"

namespace wl {

double QuasimodeConfig::chi(double eta) const {
  return plateau_cutoff(eta, rho / 3.0, 2.0 * rho / 3.0);
}

double QuasimodeConfig::theta_of_f(double f) const {
  const double upper = h_star + 0.75 * rho;  // theta == 0 above
  const double lower = h_star + 0.50 * rho;  // theta == 1 below
  if (f <= lower) return 1.0;
  if (f >= upper) return 0.0;
  return smooth_step((upper - f) / (upper - lower));
}

double reaction_coordinate(const SaddleData& s, const Vector& x) {
  return (x - s.point.location).dot(s.tau);
}

KappaNormalization kappa_normalization(const SaddleData& s, double rho, double eps) {
  if (eps <= 0.0 || rho <= 0.0)
    throw InvalidInput("kappa_normalization: rho and eps must be positive");
  const double mu_abs = std::abs(s.mu);
  auto integrand = [&](double eta) {
    return plateau_cutoff(eta, rho / 3.0, 2.0 * rho / 3.0) *
           std::exp(-mu_abs * eta * eta / (2.0 * eps));
  };
  const double half = 0.5 * adaptive_simpson(integrand, -2.0 * rho / 3.0,
                                             2.0 * rho / 3.0, 1e-13);
  KappaNormalization out;
  out.exact = 1.0 / half;
  out.asymptotic = 2.0 * std::sqrt(mu_abs / (2.0 * M_PI * eps));
  return out;
}

namespace {

enum class SiteClass : char { Outside, Tube, WellZero, WellOne, DeadPocket };

struct Classification {
  std::vector<SiteClass> cls;
  std::vector<int> tube_of;  // saddle index when cls == Tube
  Vector f;                  // cached potential values
};

/// Assigns every lattice site to the tube of a saddle, one of the two well
/// components, a theta-dead pocket, or the outside of the sublevel set.
Classification classify_sites(const Potential& p, const LatticeBox& box,
                              const QuasimodeConfig& cfg, bool validating) {
  const Index n = box.size();
  Classification out;
  out.cls.assign(static_cast<std::size_t>(n), SiteClass::Outside);
  out.tube_of.assign(static_cast<std::size_t>(n), -1);
  out.f.resize(n);

  const double level = cfg.h_star + cfg.rho;
  for (Index i = 0; i < n; ++i) {
    const Vector x = box.site(i);
    out.f[i] = p.eval(x);
    if (out.f[i] >= level) continue;
    int tube = -1;
    for (int k = 0; k < static_cast<int>(cfg.saddles.size()); ++k) {
      if (std::abs(reaction_coordinate(cfg.saddles[k], x)) <= cfg.rho) {
        if (tube >= 0)
          throw ConfigInvalid("quasimode tubes overlap (condition: R_k pairwise disjoint)");
        tube = k;
      }
    }
    if (tube >= 0) {
      out.cls[i] = SiteClass::Tube;
      out.tube_of[i] = tube;
    } else {
      out.cls[i] = SiteClass::WellZero;  // provisional; resolved below
    }
  }

  // Connected components of the non-tube sublevel sites.
  UnionFind uf(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (out.cls[i] != SiteClass::WellZero) continue;
    for (int axis = 0; axis < box.dim(); ++axis) {
      const Index j = box.neighbor(i, axis, +1);
      if (j >= 0 && out.cls[j] == SiteClass::WellZero)
        uf.unite(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  const Index i0 = box.nearest_site(cfg.m0.location);
  const Index i1 = box.nearest_site(cfg.m1.location);
  if (out.cls[i0] != SiteClass::WellZero || out.cls[i1] != SiteClass::WellZero)
    throw ConfigInvalid("quasimode: a minimum is not inside the non-tube sublevel set");
  const std::size_t c0 = uf.find(static_cast<std::size_t>(i0));
  const std::size_t c1 = uf.find(static_cast<std::size_t>(i1));
  if (c0 == c1)
    throw ConfigInvalid("quasimode: sublevel set minus tubes does not separate the "
                        "minima (condition: exactly two components)");

  for (Index i = 0; i < n; ++i) {
    if (out.cls[i] != SiteClass::WellZero) continue;
    const std::size_t c = uf.find(static_cast<std::size_t>(i));
    if (c == c0) {
      out.cls[i] = SiteClass::WellZero;
    } else if (c == c1) {
      out.cls[i] = SiteClass::WellOne;
    } else if (cfg.theta_of_f(out.f[i]) > 0.0) {
      const std::string msg =
          "quasimode: sublevel site with theta > 0 in neither well component";
      if (validating) throw ConfigInvalid(msg);
      throw ComponentAmbiguous(msg);
    } else {
      out.cls[i] = SiteClass::DeadPocket;
    }
  }
  return out;
}

}  // namespace

void validate_quasimode_config(const Potential& p, const LatticeBox& box,
                               const QuasimodeConfig& cfg) {
  if (cfg.rho <= 0.0) throw ConfigInvalid("quasimode: rho must be positive");
  if (cfg.saddles.empty()) throw ConfigInvalid("quasimode: no saddles");

  const Classification cls = classify_sites(p, box, cfg, /*validating=*/true);

  // phi_k = f + |mu_k| xi_k^2 must exceed f(s_k) on the tube away from s_k.
  for (Index i = 0; i < box.size(); ++i) {
    if (cls.cls[i] != SiteClass::Tube) continue;
    const int k = cls.tube_of[i];
    const auto& s = cfg.saddles[static_cast<std::size_t>(k)];
    const Vector x = box.site(i);
    if ((x - s.point.location).norm() < 0.5 * box.eps()) continue;
    const double xi = reaction_coordinate(s, x);
    const double phi = cls.f[i] + std::abs(s.mu) * xi * xi;
    if (phi <= s.point.value)
      throw ConfigInvalid("quasimode: phi_k = f + |mu| xi^2 not above the saddle level "
                          "inside a tube");
  }
}

namespace {

/// Steepest-descent probe used to orient tau: walks downhill until it lands
/// near one of the two minima.
int descend_to_minimum(const Potential& p, Vector x, const CriticalPoint& m0,
                       const CriticalPoint& m1) {
  const double capture = 0.25 * (m0.location - m1.location).norm();
  const double step = std::min(0.02, 0.1 * capture);
  for (int it = 0; it < 20000; ++it) {
    if ((x - m0.location).norm() < capture) return 0;
    if ((x - m1.location).norm() < capture) return 1;
    Vector g = p.grad(x);
    const double gn = g.norm();
    if (gn < 1e-12) break;
    x -= (step / gn) * g;
  }
  if ((x - m0.location).norm() < (x - m1.location).norm()) return 0;
  return 1;
}

}  // namespace

QuasimodeConfig auto_quasimode_config(const Potential& p, const LatticeBox& box,
                                      const CriticalPoint& m0, const CriticalPoint& m1,
                                      const std::vector<SaddleData>& saddles,
                                      double h_star,
                                      std::optional<double> rho_override) {
  if (saddles.empty()) throw ConfigInvalid("auto_quasimode_config: no saddles");
  QuasimodeConfig cfg;
  cfg.h_star = h_star;
  cfg.m0 = m0;
  cfg.m1 = m1;
  cfg.saddles = saddles;

  // Orient each tau toward the m1 side via descent probes.
  for (auto& s : cfg.saddles) {
    double near_dist = std::min((s.point.location - m0.location).norm(),
                                (s.point.location - m1.location).norm());
    for (const auto& other : saddles) {
      const double dd = (s.point.location - other.point.location).norm();
      if (dd > 1e-9) near_dist = std::min(near_dist, dd);
    }
    const double c0 = 0.2 * near_dist;
    const int plus_side = descend_to_minimum(p, s.point.location + c0 * s.tau, m0, m1);
    const int minus_side = descend_to_minimum(p, s.point.location - c0 * s.tau, m0, m1);
    if (plus_side == minus_side)
      throw ConfigInvalid("auto_quasimode_config: descent probes land in the same well");
    if (plus_side == 0) s.tau = -s.tau;
  }

  double dist = std::numeric_limits<double>::infinity();
  for (const auto& s : cfg.saddles) {
    double nearest = std::min((s.point.location - m0.location).norm(),
                              (s.point.location - m1.location).norm());
    for (const auto& other : saddles) {
      const double dd = (s.point.location - other.point.location).norm();
      if (dd > 1e-9) nearest = std::min(nearest, dd);
    }
    dist = std::min(dist, nearest);
  }

  // The chi plateau (rho/3) must cover the kappa Gaussian width sqrt(eps/|mu|)
  // at desk-scale eps, so the widest admissible tube is preferred.
  std::vector<double> candidates;
  if (rho_override) {
    candidates.push_back(*rho_override);
  } else {
    for (double beta : {0.9, 0.75, 0.6, 0.45, 0.3, 0.15, 0.075})
      candidates.push_back(beta * dist);
  }

  std::string last_error;
  for (double rho : candidates) {
    cfg.rho = rho;
    try {
      validate_quasimode_config(p, box, cfg);
      return cfg;
    } catch (const ConfigInvalid& e) {
      last_error = e.what();
      if (rho_override) throw;  // explicit rho is not auto-tuned
    }
  }
  throw ConfigInvalid("auto_quasimode_config: no admissible rho found (last: " +
                      last_error + ")");
}

Vector build_quasimode(const Potential& p, const LatticeBox& box,
                       const QuasimodeConfig& cfg, double eps) {
  if (eps != box.eps()) throw InvalidInput("build_quasimode: eps differs from box spacing");
  const Classification cls = classify_sites(p, box, cfg, /*validating=*/false);
  const Index n = box.size();

  std::vector<KappaNormalization> norms;
  norms.reserve(cfg.saddles.size());
  for (const auto& s : cfg.saddles) norms.push_back(kappa_normalization(s, cfg.rho, eps));

  Vector u(n);  // theta * kappa
  for (Index i = 0; i < n; ++i) {
    double kappa = 0.0;
    switch (cls.cls[i]) {
      case SiteClass::WellZero:
        kappa = -1.0;
        break;
      case SiteClass::WellOne:
        kappa = 1.0;
        break;
      case SiteClass::Tube: {
        const int k = cls.tube_of[i];
        const auto& s = cfg.saddles[static_cast<std::size_t>(k)];
        const double xi = reaction_coordinate(s, box.site(i));
        const double mu_abs = std::abs(s.mu);
        const double cut = 2.0 * cfg.rho / 3.0;  // chi vanishes beyond
        const double upper = std::clamp(xi, -cut, cut);
        double integral = 0.0;
        if (upper != 0.0) {
          auto integrand = [&](double eta) {
            return cfg.chi(eta) * std::exp(-mu_abs * eta * eta / (2.0 * eps));
          };
          integral = adaptive_simpson(integrand, 0.0, upper, 1e-13);
        }
        kappa = norms[static_cast<std::size_t>(k)].exact * integral;
        break;
      }
      case SiteClass::DeadPocket:
      case SiteClass::Outside:
        kappa = 0.0;
        break;
    }
    u[i] = cfg.theta_of_f(cls.f[i]) * kappa;
  }

  const Vector w = ground_state_weight(p, box, eps);
  const double w2 = w.squaredNorm();
  const double projection = u.cwiseProduct(w).dot(w) / w2;
  return (0.5 * u.array() - 0.5 * projection).matrix().cwiseProduct(w);
}

PredictedMeasured quasimode_norm(const LatticeBox& box, const Vector& psi,
                                 const QuasimodeConfig& cfg, double eps) {
  PredictedMeasured out;
  out.measured = lattice_dot(box, psi, psi);
  const double det0 = cfg.m0.hessian_det();
  const double det1 = cfg.m1.hessian_det();
  const bool tied = std::abs(cfg.m0.value - cfg.m1.value) <= cfg.value_tie_tol;
  const double J = tied ? 1.0 / (std::sqrt(det0) + std::sqrt(det1))
                        : 1.0 / std::sqrt(cfg.m0.value < cfg.m1.value ? det0 : det1);
  const double h_low = std::min(cfg.m0.value, cfg.m1.value);
  const int d = box.dim();
  out.predicted = std::pow(2.0 * M_PI * eps, 0.5 * d) * J * std::exp(-h_low / eps);
  return out;
}

PredictedMeasured quasimode_dirichlet(const LatticeBox& box, const Vector& psi,
                                      const SparseOperator& op,
                                      const QuasimodeConfig& cfg) {
  if (psi.size() != op.size()) throw ShapeMismatch("quasimode_dirichlet: length mismatch");
  PredictedMeasured out;
  out.measured = lattice_dot(box, op.apply(psi), psi);
  const double eps = op.eps;
  const int d = box.dim();
  double sum = 0.0;
  for (const auto& s : cfg.saddles)
    sum += std::abs(s.mu) / (2.0 * M_PI) / std::sqrt(s.det_abs);
  out.predicted = eps * sum * std::pow(2.0 * M_PI * eps, 0.5 * d) *
                  std::exp(-cfg.h_star / eps);
  return out;
}

ResidualReport quasimode_residual(const LatticeBox& box, const Vector& psi,
                                  const SparseOperator& op, const QuasimodeConfig& cfg) {
  if (psi.size() != op.size()) throw ShapeMismatch("quasimode_residual: length mismatch");
  ResidualReport out;
  const Vector hpsi = op.apply(psi);
  out.measured_sq = lattice_dot(box, hpsi, hpsi);
  out.scale = std::pow(op.eps, 3) * std::exp(-cfg.h_star / op.eps);
  return out;
}

double abstract_lower_bound(double dirichlet, double residual_sq, double norm_sq,
                            double tau, Warnings* warnings) {
  if (dirichlet <= 0.0 || norm_sq <= 0.0 || tau <= 0.0 || residual_sq < 0.0)
    throw InvalidInput("abstract_lower_bound: inputs must be positive");
  const double tuu = dirichlet / norm_sq;
  const double tu_sq = residual_sq / norm_sq;
  const double r_sq = tu_sq / (tau * tuu);
  const double r = std::sqrt(r_sq);
  if (r >= 1.0) {
    warn(warnings, "QualityWarning: abstract lower bound degenerate (R >= 1), clamped at 0");
    return 0.0;
  }
  return tuu * (1.0 - r);
}

QuasimodeReport evaluate_quasimode(const Potential& p, const LatticeBox& box,
                                   const QuasimodeConfig& cfg, double eps,
                                   double lower_bound_tau, Warnings* warnings) {
  QuasimodeReport rep;
  rep.eps = eps;
  rep.rho = cfg.rho;
  const Vector psi = build_quasimode(p, box, cfg, eps);
  const SparseOperator op = assemble_witten(p, box, warnings);

  const auto norm = quasimode_norm(box, psi, cfg, eps);
  rep.norm_sq_measured = norm.measured;
  rep.norm_sq_predicted = norm.predicted;

  const auto dirichlet = quasimode_dirichlet(box, psi, op, cfg);
  rep.dirichlet_measured = dirichlet.measured;
  rep.dirichlet_predicted = dirichlet.predicted;

  const auto residual = quasimode_residual(box, psi, op, cfg);
  rep.residual_sq_measured = residual.measured_sq;
  rep.residual_scale = residual.scale;

  rep.rayleigh_quotient = rep.dirichlet_measured / rep.norm_sq_measured;
  rep.lower_bound = abstract_lower_bound(rep.dirichlet_measured, rep.residual_sq_measured,
                                         rep.norm_sq_measured, lower_bound_tau, warnings);

  const Vector w = ground_state_weight(p, box, eps, warnings);
  rep.ortho_defect = std::abs(lattice_dot(box, psi, w));
  return rep;
}

}  // namespace wl
