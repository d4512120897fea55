#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "singopt/conditions.hpp"
#include "singopt/problems.hpp"
#include "singopt/solvers.hpp"

namespace singopt {

struct X0Spec {
  bool is_explicit{true};
  Eigen::VectorXd coords;     // explicit mode
  double near_s_radius{0.2};  // near_S mode
  std::uint64_t seed{0};
};

struct RegionParams {
  Eigen::VectorXd center;
  double r_inner{0.0};
  double r_outer{0.1};
  int samples{4096};
  std::uint64_t seed{0};
  double eps_f{1e-14};
};

struct AnalysisFlags {
  bool rate{true};
  bool decrease{false};
  bool conditions{false};
  bool mb_check{false};
  std::optional<RegionParams> region;
  int mb_probes{8};
  double mb_probe_radius{1e-2};
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<SolverConfig> solvers;
  X0Spec x0;
  AnalysisFlags analyses;
  std::string output_dir{"out"};
  std::uint64_t seed{0};
  std::string config_path;
};

/// Parses and validates a TOML experiment config. Throws ConfigError with a
/// line or field diagnostic.
ExperimentConfig load_config(const std::string& path);

/// Runs every solver, writes trace_<name>.csv per solver plus summary.json
/// into the output directory, and returns the process exit code:
/// 0 on completion, 2 when any solver diverged.
int run_experiment(const ExperimentConfig& cfg, const std::string& out_override = "");

/// Landscape-condition report (estimates, exponent fit, Hessian structure,
/// implication table) as JSON.
nlohmann::ordered_json conditions_report(const Problem& p, const RegionSpec& region,
                                         int mb_probes, double mb_probe_radius);

/// Starting point resolution, exposed for tests: either validated explicit
/// coordinates or a seeded point at the given distance from S.
Point resolve_x0(const Problem& p, const X0Spec& spec);

/// Stable CSV encoding of a trace (header: k,f,grad_norm,dist_S,step_norm,
/// ratio,reg,accepted).
std::string trace_to_csv(const Trace& trace);

}  // namespace singopt
