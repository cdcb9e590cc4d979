#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "wl/lattice.hpp"
#include "wl/potential.hpp"
#include "wl/types.hpp"

namespace wl {

/// Continuous-time jump process with rates
/// r_eps(x, x+eps v) = (1/eps) exp(-[f(x+eps v)-f(x)]/(2 eps)).
struct SimConfig {
  double eps = 0.1;
  Vector start;          // starting point; the walk begins at the nearest site
  Vector target_center;  // typically m1
  double target_radius = 0.0;  // 0 -> default max(3 eps, 0.1)
  std::uint64_t seed = 1;
  double max_time = 1e9;
  int n_trajectories = 1;
  Vector region_center;       // validated region; walkers must stay inside
  Vector region_half_widths;

  void validate() const;
  double effective_target_radius(Warnings* warnings = nullptr) const;
};

struct HittingRecord {
  bool hit = false;
  double time = 0.0;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  int traj_index = 0;
};

/// One trajectory, fully determined by (cfg.seed, traj_index) through a
/// counter-based stream; raising max_time only extends the same path.
HittingRecord simulate_trajectory(const Potential& p, const SimConfig& cfg,
                                  int traj_index, Warnings* warnings = nullptr);

std::vector<HittingRecord> run_ensemble(const Potential& p, const SimConfig& cfg,
                                        Warnings* warnings = nullptr);

struct HittingStats {
  double mean = 0.0;
  double stderr_mean = 0.0;
  double exp_diagnostic = 0.0;  // mean/median * ln 2, ~1 for exponential laws
  int n_uncensored = 0;
  int n_censored = 0;
};

/// Sample mean and standard error over uncensored records. Throws AllCensored
/// when nothing hit, InsufficientData with fewer than two uncensored records.
HittingStats mean_hitting_time(const std::vector<HittingRecord>& records);

/// States of one trajectory observed at regular intervals sample_dt, keyed by
/// the integer lattice offset from the start site. Used for the empirical
/// detailed-balance check.
std::map<std::vector<int>, long long> sample_occupation(const Potential& p,
                                                        const SimConfig& cfg,
                                                        int n_samples, double sample_dt,
                                                        int traj_index = 0);

}  // namespace wl
