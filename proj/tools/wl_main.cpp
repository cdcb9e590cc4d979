#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wl/runner.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string potential = "double_well_1d";
  std::vector<double> eps;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> k;
  std::optional<double> rho;
  std::optional<int> n_traj;
  std::optional<double> max_time;
  std::optional<double> target_radius;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON config file");
  cmd->add_option("--potential", opt.potential, "builtin potential name");
  cmd->add_option("--eps", opt.eps, "epsilon sweep values (strictly decreasing)");
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--seed", opt.seed, "PRNG seed");
  cmd->add_option("--threads", opt.threads, "worker threads");
  cmd->add_option("--k", opt.k, "number of eigenpairs");
  cmd->add_option("--rho", opt.rho, "quasimode tube half-width override");
  cmd->add_option("--n-traj", opt.n_traj, "number of trajectories");
  cmd->add_option("--max-time", opt.max_time, "trajectory time cap");
  cmd->add_option("--r-target", opt.target_radius, "target ball radius");
}

nlohmann::json merged_config(const std::string& subcommand, const CliOptions& opt) {
  nlohmann::json doc = wl::default_config_json(subcommand, opt.potential);
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw wl::ConfigError("cannot open config file: " + opt.config_path);
    nlohmann::json file;
    try {
      in >> file;
    } catch (const nlohmann::json::exception& e) {
      throw wl::ConfigError(std::string("config parse error: ") + e.what());
    }
    doc.update(file);
  }
  // Flags override file values.
  if (!opt.eps.empty()) doc["eps_list"] = opt.eps;
  if (!opt.out.empty()) doc["out"] = opt.out;
  if (opt.seed) doc["seed"] = *opt.seed;
  if (opt.threads) doc["threads"] = *opt.threads;
  if (opt.k) doc["k"] = *opt.k;
  if (opt.rho) doc["rho"] = *opt.rho;
  if (opt.n_traj) doc["n_trajectories"] = *opt.n_traj;
  if (opt.max_time) doc["max_time"] = *opt.max_time;
  if (opt.target_radius) doc["target_radius"] = *opt.target_radius;
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wl - discrete Witten Laplacian toolkit"};
  app.require_subcommand(1);

  const std::vector<std::string> names = {"landscape",  "spectrum",      "sweep",
                                          "quasimode",  "laplace-check", "simulate"};
  CliOptions opt;
  for (const auto& name : names) add_common(app.add_subcommand(name), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const nlohmann::json doc = merged_config(sub, opt);
    const wl::ExperimentConfig cfg = wl::config_from_json(doc);
    wl::run_subcommand(sub, cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wl %s: error: %s\n", sub.c_str(), e.what());
    return wl::exit_code_for_exception(e);
  }
  return 0;
}
