#include "wl/process_sim.hpp"

#include <algorithm>
#include <cmath>

#include "wl/rng.hpp"

namespace wl {

namespace {
constexpr double kRateExpClamp = 700.0;

/// Shared jump-chain core: integer offsets from the lattice-snapped start keep
/// positions exact, one counter-based stream per (seed, trajectory).
struct Walker {
  const Potential& p;
  const SimConfig& cfg;
  CounterRng rng;
  IntVector k;
  Vector origin;
  std::vector<double> rates;

  Walker(const Potential& p_in, const SimConfig& cfg_in, int traj_index)
      : p(p_in),
        cfg(cfg_in),
        rng(cfg_in.seed, static_cast<std::uint64_t>(traj_index)),
        k(IntVector::Zero(p_in.dim)),
        origin(p_in.dim),
        rates(static_cast<std::size_t>(2 * p_in.dim)) {
    for (int i = 0; i < p.dim; ++i) {
      const double off = std::round((cfg.start[i] - cfg.region_center[i]) / cfg.eps);
      origin[i] = cfg.region_center[i] + cfg.eps * off;
    }
  }

  Vector position() const {
    Vector x(p.dim);
    for (int i = 0; i < p.dim; ++i) x[i] = origin[i] + cfg.eps * k[i];
    return x;
  }

  /// Draws the holding time at the current site and jumps; returns the holding
  /// time. Throws RateOverflow on clamp violations or region exits.
  double step() {
    const Vector x = position();
    for (int i = 0; i < p.dim; ++i)
      if (std::abs(x[i] - cfg.region_center[i]) > cfg.region_half_widths[i])
        throw RateOverflow("jump process: walker left the validated region");

    const double fx = p.eval(x);
    double total = 0.0;
    Vector y = x;
    for (int axis = 0; axis < p.dim; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        y[axis] = x[axis] + dir * cfg.eps;
        const double arg = -(p.eval(y) - fx) / (2.0 * cfg.eps);
        y[axis] = x[axis];
        if (std::abs(arg) > kRateExpClamp)
          throw RateOverflow("jump process: rate exponent beyond the clamp");
        const std::size_t slot = static_cast<std::size_t>(2 * axis + (dir + 1) / 2);
        rates[slot] = std::exp(arg) / cfg.eps;
        total += rates[slot];
      }
    }

    const double hold = rng.next_exponential(total);
    double pick = rng.next_unit() * total;
    int move = 2 * p.dim - 1;
    for (int i = 0; i < 2 * p.dim; ++i) {
      pick -= rates[static_cast<std::size_t>(i)];
      if (pick <= 0.0) {
        move = i;
        break;
      }
    }
    k[move / 2] += (move % 2 == 0) ? -1 : +1;
    return hold;
  }
};

}  // namespace

void SimConfig::validate() const {
  if (eps <= 0.0) throw InvalidInput("SimConfig: eps must be positive");
  if (n_trajectories < 1) throw InvalidInput("SimConfig: n_trajectories must be >= 1");
  if (max_time <= 0.0) throw InvalidInput("SimConfig: max_time must be positive");
  const double r = target_radius > 0.0 ? target_radius : std::max(3.0 * eps, 0.1);
  if ((start - target_center).norm() <= r)
    throw InvalidInput("SimConfig: start lies inside the target set");
}

double SimConfig::effective_target_radius(Warnings* warnings) const {
  const double r = target_radius > 0.0 ? target_radius : std::max(3.0 * eps, 0.1);
  if (r <= 2.0 * eps)
    warn(warnings, "target radius <= 2 eps; the target may contain few lattice sites");
  return r;
}

HittingRecord simulate_trajectory(const Potential& p, const SimConfig& cfg,
                                  int traj_index, Warnings* warnings) {
  cfg.validate();
  const double r_target = cfg.effective_target_radius(warnings);

  HittingRecord rec;
  rec.seed = cfg.seed;
  rec.traj_index = traj_index;

  Walker walker(p, cfg, traj_index);
  double t = 0.0;
  for (;;) {
    const double hold = walker.step();
    if (t + hold > cfg.max_time) {
      rec.hit = false;
      rec.time = cfg.max_time;
      // the jump has been drawn but not taken: the path up to max_time is the
      // same no matter how much later the cap sits
      return rec;
    }
    t += hold;
    ++rec.steps;
    if ((walker.position() - cfg.target_center).norm() <= r_target) {
      rec.hit = true;
      rec.time = t;
      return rec;
    }
  }
}

std::vector<HittingRecord> run_ensemble(const Potential& p, const SimConfig& cfg,
                                        Warnings* warnings) {
  std::vector<HittingRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.n_trajectories));
  for (int i = 0; i < cfg.n_trajectories; ++i)
    records.push_back(simulate_trajectory(p, cfg, i, warnings));
  return records;
}

HittingStats mean_hitting_time(const std::vector<HittingRecord>& records) {
  std::vector<double> times;
  int censored = 0;
  for (const auto& r : records) {
    if (r.hit)
      times.push_back(r.time);
    else
      ++censored;
  }
  if (times.empty()) throw AllCensored("mean_hitting_time: no trajectory hit the target");
  if (times.size() < 2)
    throw InsufficientData("mean_hitting_time: need at least two uncensored records");

  HittingStats stats;
  stats.n_uncensored = static_cast<int>(times.size());
  stats.n_censored = censored;
  double sum = 0.0;
  for (double t : times) sum += t;
  stats.mean = sum / static_cast<double>(times.size());
  double var = 0.0;
  for (double t : times) var += (t - stats.mean) * (t - stats.mean);
  var /= static_cast<double>(times.size() - 1);
  stats.stderr_mean = std::sqrt(var / static_cast<double>(times.size()));

  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  const double median =
      (n % 2 == 1) ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  stats.exp_diagnostic = stats.mean / median * std::log(2.0);
  return stats;
}

std::map<std::vector<int>, long long> sample_occupation(const Potential& p,
                                                        const SimConfig& cfg,
                                                        int n_samples, double sample_dt,
                                                        int traj_index) {
  if (n_samples < 1 || sample_dt <= 0.0)
    throw InvalidInput("sample_occupation: need positive n_samples and sample_dt");
  std::map<std::vector<int>, long long> counts;
  Walker walker(p, cfg, traj_index);
  double t = 0.0;
  double next_sample = sample_dt;
  int taken = 0;
  while (taken < n_samples) {
    const std::vector<int> state(walker.k.data(), walker.k.data() + walker.k.size());
    const double hold = walker.step();
    // the path sits at `state` during [t, t + hold)
    while (taken < n_samples && next_sample <= t + hold) {
      ++counts[state];
      ++taken;
      next_sample += sample_dt;
    }
    t += hold;
  }
  return counts;
}

}  // namespace wl
