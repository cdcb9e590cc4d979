#include "wl/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "wl/errors.hpp"
#include "wl/rng.hpp"
#include "wl/union_find.hpp"

namespace wl {

double EkPrediction::gap_prediction(double eps) const {
  return eps * A * std::exp(-E / eps);
}

namespace {

bool inside_box(const Vector& x, const Vector& center, const Vector& hw, double slack) {
  for (int i = 0; i < x.size(); ++i)
    if (std::abs(x[i] - center[i]) > hw[i] + slack) return false;
  return true;
}

/// Multi-dimensional node grid over the box, axis counts n[i], spacing ~step.
struct NodeGrid {
  Vector origin;
  Vector spacing;
  IntVector counts;
  int dim;

  std::size_t size() const {
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(counts[i]);
    return n;
  }
  Vector node(std::size_t idx) const {
    Vector x(dim);
    for (int i = dim - 1; i >= 0; --i) {
      const std::size_t c = static_cast<std::size_t>(counts[i]);
      x[i] = origin[i] + spacing[i] * static_cast<double>(idx % c);
      idx /= c;
    }
    return x;
  }
  std::size_t index_of_multi(const IntVector& k) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim; ++i) idx = idx * counts[i] + k[i];
    return idx;
  }
  IntVector multi_of_index(std::size_t idx) const {
    IntVector k(dim);
    for (int i = dim - 1; i >= 0; --i) {
      k[i] = static_cast<int>(idx % counts[i]);
      idx /= counts[i];
    }
    return k;
  }
  bool on_boundary(std::size_t idx) const {
    IntVector k = multi_of_index(idx);
    for (int i = 0; i < dim; ++i)
      if (k[i] == 0 || k[i] == counts[i] - 1) return true;
    return false;
  }
  std::size_t nearest(const Vector& x) const {
    IntVector k(dim);
    for (int i = 0; i < dim; ++i) {
      int ki = static_cast<int>(std::lround((x[i] - origin[i]) / spacing[i]));
      k[i] = std::clamp(ki, 0, counts[i] - 1);
    }
    return index_of_multi(k);
  }
};

NodeGrid make_node_grid(int dim, const Vector& center, const Vector& hw, double step) {
  NodeGrid g;
  g.dim = dim;
  g.origin = center - hw;
  g.counts.resize(dim);
  g.spacing.resize(dim);
  for (int i = 0; i < dim; ++i) {
    const int n = std::max(2, static_cast<int>(std::ceil(2.0 * hw[i] / step)) + 1);
    g.counts[i] = n;
    g.spacing[i] = 2.0 * hw[i] / (n - 1);
  }
  return g;
}

Vector eigen_ascending(const Matrix& H, Matrix* vectors = nullptr) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (vectors) *vectors = es.eigenvectors();
  return es.eigenvalues();
}

}  // namespace

CriticalPoint classify_critical_point(const Potential& p, const Vector& z,
                                      double newton_tol, double degeneracy_rel_tol) {
  const double gn = p.grad(z).norm();
  if (gn > newton_tol)
    throw InvalidInput("classify_critical_point: |grad f| = " + std::to_string(gn) +
                       " exceeds tolerance");
  CriticalPoint cp;
  cp.location = z;
  cp.value = p.eval(z);
  const Matrix H = p.hess(z);
  cp.hessian_eigenvalues = eigen_ascending(H);
  const double scale = cp.hessian_eigenvalues.cwiseAbs().maxCoeff();
  if (scale <= 0.0)
    throw NondegeneracyViolation("critical point at f = " + std::to_string(cp.value) +
                                 " has a vanishing Hessian");
  const double floor = degeneracy_rel_tol * scale;
  cp.index = 0;
  for (Index i = 0; i < cp.hessian_eigenvalues.size(); ++i) {
    const double ev = cp.hessian_eigenvalues[i];
    if (std::abs(ev) < floor)
      throw NondegeneracyViolation("critical point at f = " + std::to_string(cp.value) +
                                   " has near-zero Hessian eigenvalue");
    if (ev < 0.0) ++cp.index;
  }
  return cp;
}

std::vector<CriticalPoint> find_critical_points(const Potential& p, const Vector& center,
                                                const Vector& half_widths,
                                                const CriticalPointOptions& opt,
                                                int* n_failed_seeds) {
  if (opt.seed_grid_step <= 0.0 || opt.newton_tol <= 0.0)
    throw InvalidInput("find_critical_points: steps and tolerances must be positive");

  const int d = p.dim;
  const NodeGrid seeds = make_node_grid(d, center, half_widths, opt.seed_grid_step);
  std::vector<Vector> converged;
  int failed = 0;

  const double step_cap = 0.5 * half_widths.minCoeff();
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    Vector x = seeds.node(s);
    bool ok = false;
    for (int it = 0; it < opt.max_newton_iter; ++it) {
      const Vector g = p.grad(x);
      if (g.norm() <= opt.newton_tol) {
        ok = true;
        break;
      }
      const Matrix H = p.hess(x);
      Vector step = H.fullPivLu().solve(-g);
      if (!step.allFinite()) break;
      const double len = step.norm();
      if (len > step_cap) step *= step_cap / len;
      x += step;
      if (!inside_box(x, center, half_widths, 2.0 * half_widths.maxCoeff())) break;
    }
    if (!ok || !inside_box(x, center, half_widths, 1e-9)) {
      ++failed;
      continue;
    }
    converged.push_back(x);
  }
  if (n_failed_seeds) *n_failed_seeds = failed;

  // Deterministic merge order: sort by location before dedup.
  std::sort(converged.begin(), converged.end(), [](const Vector& a, const Vector& b) {
    for (int i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  });
  const double merge_dist = 10.0 * opt.newton_tol;
  std::vector<Vector> unique;
  for (const auto& x : converged) {
    bool dup = false;
    for (const auto& u : unique)
      if ((x - u).norm() < std::max(merge_dist, 1e-7)) {
        dup = true;
        break;
      }
    if (!dup) unique.push_back(x);
  }

  std::vector<CriticalPoint> out;
  for (const auto& x : unique)
    out.push_back(classify_critical_point(p, x, 10.0 * opt.newton_tol,
                                          opt.degeneracy_rel_tol));
  std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    for (int i = 0; i < a.location.size(); ++i)
      if (a.location[i] != b.location[i]) return a.location[i] < b.location[i];
    return false;
  });
  return out;
}

double disconnecting_height(const Potential& p, const Vector& m0, const Vector& m1,
                            const Vector& center, const Vector& half_widths,
                            double grid_step) {
  if ((m0 - m1).norm() < 1e-12)
    throw InvalidInput("disconnecting_height: minima coincide");
  const int d = p.dim;
  const NodeGrid grid = make_node_grid(d, center, half_widths, grid_step);
  const std::size_t n = grid.size();

  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = p.eval(grid.node(i));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });

  const std::size_t a = grid.nearest(m0);
  const std::size_t b = grid.nearest(m1);
  UnionFind uf(n);
  std::vector<char> active(n, 0);
  // component flag: has this component touched the box boundary yet?
  std::vector<char> touched(n, 0);
  auto unite_tracked = [&](std::size_t x, std::size_t y) {
    const std::size_t rx = uf.find(x);
    const std::size_t ry = uf.find(y);
    if (rx == ry) return;
    const char t = touched[rx] | touched[ry];
    uf.unite(rx, ry);
    touched[uf.find(rx)] = t;
  };

  double max_increment = 0.0;
  for (std::size_t r = 1; r < n; ++r)
    max_increment = std::max(max_increment, f[order[r]] - f[order[r - 1]]);

  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t u = order[r];
    active[u] = 1;
    if (grid.on_boundary(u)) touched[uf.find(u)] = 1;
    IntVector k = grid.multi_of_index(u);
    for (int axis = 0; axis < d; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const int kk = k[axis] + dir;
        if (kk < 0 || kk >= grid.counts[axis]) continue;
        IntVector kn = k;
        kn[axis] = kk;
        const std::size_t v = grid.index_of_multi(kn);
        if (active[v]) unite_tracked(u, v);
      }
    }

    if (active[a] && active[b] && uf.same(a, b)) {
      const double h_star = f[u];
      if (h_star <= std::max(f[a], f[b]) + max_increment)
        throw NotSeparated("disconnecting_height: minima connected at their own level");
      if (touched[uf.find(a)])
        throw BoxTooSmall("disconnecting_height: connecting component touches the box "
                          "boundary at level h*");
      return h_star;
    }
  }
  throw NotSeparated("disconnecting_height: sweep ended without a merge");
}

namespace {

/// BFS connectivity between two probe nodes within {f < level} on a local grid
/// around the saddle.
bool probes_connected(const Potential& p, const NodeGrid& grid, double level,
                      std::size_t from, std::size_t to) {
  if (p.eval(grid.node(from)) >= level || p.eval(grid.node(to)) >= level) return false;
  std::vector<char> seen(grid.size(), 0);
  std::queue<std::size_t> q;
  q.push(from);
  seen[from] = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    if (u == to) return true;
    IntVector k = grid.multi_of_index(u);
    for (int axis = 0; axis < grid.dim; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const int kk = k[axis] + dir;
        if (kk < 0 || kk >= grid.counts[axis]) continue;
        IntVector kn = k;
        kn[axis] = kk;
        const std::size_t v = grid.index_of_multi(kn);
        if (seen[v]) continue;
        seen[v] = 1;
        if (p.eval(grid.node(v)) < level) q.push(v);
      }
    }
  }
  return false;
}

}  // namespace

std::vector<SaddleData> relevant_saddles(const Potential& p,
                                         const std::vector<CriticalPoint>& candidates,
                                         double h_star, double level_tol) {
  if (level_tol <= 0.0) throw InvalidInput("relevant_saddles: level_tol must be positive");
  std::vector<SaddleData> out;
  for (const auto& cp : candidates) {
    if (cp.index != 1) continue;
    if (std::abs(cp.value - h_star) > level_tol) continue;

    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& other : candidates) {
      const double dist = (other.location - cp.location).norm();
      if (dist > 1e-9) nearest = std::min(nearest, dist);
    }
    if (!std::isfinite(nearest)) nearest = 1.0;

    Matrix vecs;
    const Matrix H = p.hess(cp.location);
    const Vector evs = eigen_ascending(H, &vecs);
    SaddleData sd;
    sd.point = cp;
    sd.mu = evs[0];
    sd.tau = vecs.col(0).normalized();
    sd.det_abs = std::abs(evs.prod());

    // Local reconnection test in a ball around s.
    const double r = std::min(1.0, 0.45 * nearest);
    const double c = 0.4 * r;
    const double delta = std::abs(sd.mu) * c * c / 8.0;
    NodeGrid local = make_node_grid(p.dim, cp.location,
                                    Vector::Constant(p.dim, r), r / 40.0);
    const std::size_t plus = local.nearest(cp.location + c * sd.tau);
    const std::size_t minus = local.nearest(cp.location - c * sd.tau);
    const bool connects_above =
        probes_connected(p, local, h_star + delta, plus, minus);
    const bool connects_below =
        probes_connected(p, local, h_star - delta, plus, minus);
    if (connects_above && !connects_below) out.push_back(std::move(sd));
  }
  if (out.empty())
    throw NoRelevantSaddle("relevant_saddles: no index-1 point at level h* passes the "
                           "reconnection test");
  return out;
}

EkPrediction eyring_kramers_constants(const Potential& p, const CriticalPoint& m0,
                                      const CriticalPoint& m1,
                                      const std::vector<SaddleData>& saddles,
                                      double value_tie_tol) {
  (void)p;
  if (m0.index != 0 || m1.index != 0)
    throw InvalidInput("eyring_kramers_constants: both minima must have index 0");
  if (saddles.empty()) throw InvalidInput("eyring_kramers_constants: no saddles");
  for (const auto& s : saddles) {
    if (s.point.index != 1)
      throw InvalidInput("eyring_kramers_constants: saddle with index != 1");
    if (std::abs(s.point.value - saddles.front().point.value) > value_tie_tol)
      throw InvalidInput("eyring_kramers_constants: saddle values differ beyond tie tol");
  }

  EkPrediction ek;
  ek.h_star = saddles.front().point.value;
  for (const auto& s : saddles) ek.h_star = std::max(ek.h_star, s.point.value);
  ek.h_low = std::min(m0.value, m1.value);
  ek.E = ek.h_star - ek.h_low;
  if (ek.E <= 0.0)
    throw InvalidInput("eyring_kramers_constants: nonpositive barrier height");

  ek.degenerate = std::abs(m0.value - m1.value) <= value_tie_tol;
  const double det0 = m0.hessian_det();
  const double det1 = m1.hessian_det();
  const double lower_det = (m0.value <= m1.value) ? det0 : det1;
  const double numerator =
      ek.degenerate ? std::sqrt(det0) + std::sqrt(det1) : std::sqrt(lower_det);

  constexpr double two_pi = 2.0 * M_PI;
  ek.A = 0.0;
  for (const auto& s : saddles) {
    const double contrib = std::abs(s.mu) / two_pi * numerator / std::sqrt(s.det_abs);
    ek.per_saddle.push_back(contrib);
    ek.A += contrib;
  }
  return ek;
}

BoxValidity validate_box(const Potential& p, const Vector& center,
                         const Vector& half_widths, double h_star, double barrier_E,
                         double eps_min, double gradient_floor) {
  BoxValidity v;
  v.required_margin =
      std::max(10.0 * eps_min * std::log(1.0 / eps_min), barrier_E);
  v.min_boundary_f = std::numeric_limits<double>::infinity();
  const int d = p.dim;
  const int samples = 128;
  CounterRng rng(13, 0);
  for (int axis = 0; axis < d; ++axis) {
    for (int side = -1; side <= 1; side += 2) {
      for (int s = 0; s < samples; ++s) {
        Vector x(d);
        for (int i = 0; i < d; ++i)
          x[i] = center[i] + half_widths[i] * (2.0 * rng.next_unit() - 1.0);
        x[axis] = center[axis] + side * half_widths[axis];
        v.min_boundary_f = std::min(v.min_boundary_f, p.eval(x));
      }
    }
  }
  v.min_boundary_gradient = min_boundary_gradient(p, center, half_widths);
  v.gradient_ok = v.min_boundary_gradient > gradient_floor;
  v.margin_ok = v.min_boundary_f >= h_star + v.required_margin;
  return v;
}

LandscapeSummary analyze_landscape(const Potential& p, const Vector& center,
                                   const Vector& half_widths,
                                   const CriticalPointOptions& opt) {
  LandscapeSummary s;
  s.critical_points = find_critical_points(p, center, half_widths, opt);
  for (const auto& cp : s.critical_points)
    if (cp.index == 0) s.minima.push_back(cp);
  std::sort(s.minima.begin(), s.minima.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.value < b.value; });
  if (s.minima.empty()) throw InvalidInput("analyze_landscape: no minima found");
  s.bistable = s.minima.size() == 2;
  if (s.bistable) {
    s.h_star = disconnecting_height(p, s.minima[0].location, s.minima[1].location,
                                    center, half_widths);
    s.saddles = relevant_saddles(p, s.critical_points, s.h_star, 1e-3);
    s.ek = eyring_kramers_constants(p, s.minima[0], s.minima[1], s.saddles);
  }
  return s;
}

}  // namespace wl
