#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wl/eigensolver.hpp"
#include "wl/landscape.hpp"
#include "wl/potential.hpp"

namespace wl {

using OrderedJson = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

/// Resolved batch-run configuration. Flags override file values; defaults
/// reproduce the acceptance setups from just a subcommand + builtin name.
struct ExperimentConfig {
  Potential potential;
  Vector center;
  Vector half_widths;
  std::vector<double> eps_list;  // strictly decreasing positive
  int k = 4;
  std::uint64_t seed = 1;
  int n_trajectories = 10000;
  double max_time = 0.0;       // 0 -> auto from the spectral reference
  double target_radius = 0.0;  // 0 -> module default max(3 eps, 0.1)
  std::optional<double> rho_override;
  std::string out_dir = "wl_out";
  int threads = 1;

  OrderedJson resolved_json() const;
};

OrderedJson default_config_json(const std::string& subcommand,
                                const std::string& potential_name);

/// Parses and validates a merged config document; throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);

struct SweepRow {
  double eps = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0;
  int n_small = 0;
  double ek_E = 0.0, ek_A = 0.0;
  double predicted = 0.0, ratio = 0.0;
  double quasimode_rayleigh = 0.0, lower_bound = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // descending eps
  double E_fit = 0.0, A_fit = 0.0;
};

/// Full eps-sweep of the spectral pipeline (assemble, solve, count, quasimode).
SweepReport run_sweep(const ExperimentConfig& cfg);

/// CSV: eps, lambda2, predicted, ratio, (ratio-1)/sqrt(eps); 17 digits.
std::string emit_convergence_table(const SweepReport& report);

/// Executes one subcommand (landscape | spectrum | sweep | quasimode |
/// laplace-check | simulate) and writes <name>_report.json plus
/// <name>_table.csv under cfg.out_dir. Throws on failure.
void run_subcommand(const std::string& name, const ExperimentConfig& cfg);

/// Exit-code mapping used by the CLI: 0 ok, 2 config, 3 numerical, 4 invariant.
int exit_code_for_exception(const std::exception& e);

std::string format_17g(double x);

}  // namespace wl
