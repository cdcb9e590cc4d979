#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wl/potential.hpp"
#include "wl/types.hpp"

namespace wl {

/// Newton-converged, classified critical point of f.
struct CriticalPoint {
  Vector location;
  double value = 0.0;
  Vector hessian_eigenvalues;  // ascending
  int index = 0;               // number of strictly negative Hessian eigenvalues

  bool is_minimum() const { return index == 0; }
  bool is_saddle() const { return index == 1; }
  double hessian_det() const { return hessian_eigenvalues.prod(); }
};

/// Index-1 critical point with its unstable direction.
struct SaddleData {
  CriticalPoint point;
  double mu = 0.0;   // the negative Hessian eigenvalue
  Vector tau;        // unit eigenvector of mu
  double det_abs = 0.0;
};

/// Barrier height E, prefactor A and per-saddle contributions.
struct EkPrediction {
  double h_star = 0.0;
  double h_low = 0.0;
  double E = 0.0;
  double A = 0.0;
  std::vector<double> per_saddle;
  bool degenerate = true;  // f(m0) == f(m1) within value_tie_tol

  double gap_prediction(double eps) const;  // eps * A * exp(-E/eps)
};

struct CriticalPointOptions {
  double seed_grid_step = 0.1;
  double newton_tol = 1e-10;
  int max_newton_iter = 80;
  double degeneracy_rel_tol = 1e-8;
};

/// Newton iteration on grad f = 0 seeded from a uniform grid over the box.
/// Returns deduplicated, classified points inside the box. Seeds that fail to
/// converge are skipped (count available via n_failed_seeds).
std::vector<CriticalPoint> find_critical_points(const Potential& p, const Vector& center,
                                                const Vector& half_widths,
                                                const CriticalPointOptions& opt = {},
                                                int* n_failed_seeds = nullptr);

CriticalPoint classify_critical_point(const Potential& p, const Vector& z,
                                      double newton_tol = 1e-8,
                                      double degeneracy_rel_tol = 1e-8);

/// Maximal level h* at which the grid sublevel set {f < h} still separates
/// m0 from m1; sorted-sweep union-find over an eps-independent node grid.
double disconnecting_height(const Potential& p, const Vector& m0, const Vector& m1,
                            const Vector& center, const Vector& half_widths,
                            double grid_step = 0.01);

/// Index-1 points at level h* (within level_tol) that pass the local
/// reconnection test: a ball around s connects the two sides at h*+delta and
/// separates them at h*-delta.
std::vector<SaddleData> relevant_saddles(const Potential& p,
                                         const std::vector<CriticalPoint>& candidates,
                                         double h_star, double level_tol);

EkPrediction eyring_kramers_constants(const Potential& p, const CriticalPoint& m0,
                                      const CriticalPoint& m1,
                                      const std::vector<SaddleData>& saddles,
                                      double value_tie_tol = 1e-9);

/// Box-truncation validity: the boundary must stay uphill (a positive gradient
/// floor) and clear the barrier by a margin that keeps truncation errors
/// exponentially small, max(10 eps_min ln(1/eps_min), E).
struct BoxValidity {
  double min_boundary_f = 0.0;
  double min_boundary_gradient = 0.0;
  double required_margin = 0.0;
  bool gradient_ok = false;
  bool margin_ok = false;
};
BoxValidity validate_box(const Potential& p, const Vector& center,
                         const Vector& half_widths, double h_star, double barrier_E,
                         double eps_min, double gradient_floor = 0.1);

/// Convenience: the full landscape analysis. The disconnecting height, saddles
/// and Eyring-Kramers constants are filled only in the bistable case (exactly
/// two minima, Assumption H2).
struct LandscapeSummary {
  std::vector<CriticalPoint> critical_points;
  std::vector<CriticalPoint> minima;  // ascending by value
  std::vector<SaddleData> saddles;
  double h_star = 0.0;
  EkPrediction ek;
  bool bistable = false;
};
LandscapeSummary analyze_landscape(const Potential& p, const Vector& center,
                                   const Vector& half_widths,
                                   const CriticalPointOptions& opt = {});

}  // namespace wl
