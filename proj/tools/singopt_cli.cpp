#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "singopt/conditions.hpp"
#include "singopt/errors.hpp"
#include "singopt/experiment.hpp"
#include "singopt/problems.hpp"

namespace {

Eigen::VectorXd parse_csv_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    vals.push_back(std::stod(item));
  }
  Eigen::VectorXd out(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"singopt: optimization experiments around non-isolated minima"};
  app.require_subcommand(1);

  // run subcommand
  auto* run = app.add_subcommand("run", "Run a batch experiment from a TOML config");
  std::string config_path;
  std::string out_dir;
  run->add_option("--config", config_path, "Path to the experiment config")->required();
  run->add_option("--out", out_dir, "Override the output directory");

  // conditions subcommand
  auto* cond = app.add_subcommand("conditions", "Estimate landscape constants for a problem");
  std::string problem_name;
  std::vector<std::string> params;
  std::string center_csv;
  double r_inner = 0.0, r_outer = 0.1, probe_radius = 1e-2;
  int samples = 4096, mb_probes = 8;
  std::uint64_t region_seed = 0, problem_seed = 0;
  cond->add_option("--problem", problem_name, "Catalog problem name")->required();
  cond->add_option("--param", params, "Problem parameter as key=value (repeatable)");
  cond->add_option("--problem-seed", problem_seed, "Seed for generated problem instances");
  cond->add_option("--center", center_csv, "Region center, comma-separated coordinates");
  cond->add_option("--r-inner", r_inner, "Inner annulus radius");
  cond->add_option("--r-outer", r_outer, "Outer annulus radius");
  cond->add_option("--samples", samples, "Number of region samples");
  cond->add_option("--seed", region_seed, "Sampling seed");
  cond->add_option("--mb-probes", mb_probes, "Points of S probed for rank constancy");
  cond->add_option("--probe-radius", probe_radius, "Radius of the rank-constancy probes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const singopt::ExperimentConfig cfg = singopt::load_config(config_path);
      return singopt::run_experiment(cfg, out_dir);
    }

    singopt::ProblemSpec spec;
    spec.name = problem_name;
    spec.seed = problem_seed;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw singopt::ConfigError("conditions: --param expects key=value, got '" + kv + "'");
      }
      spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    const singopt::Problem p = singopt::build_problem(spec);

    singopt::RegionSpec region;
    Eigen::VectorXd center;
    if (!center_csv.empty()) {
      center = parse_csv_vector(center_csv);
    } else if (p.oracle && p.oracle->project_to_S) {
      // default: anchor the region on S near the origin-side representative
      Eigen::VectorXd probe = Eigen::VectorXd::Zero(p.manifold.ambient_dim);
      if (p.manifold.kind == singopt::ManifoldKind::UnitSphere) probe[0] = 1.0;
      center = p.oracle->project_to_S(singopt::make_point(p.manifold, probe)).coords;
    } else {
      center = Eigen::VectorXd::Zero(p.manifold.ambient_dim);
    }
    region.center = singopt::make_point(p.manifold, center);
    region.r_inner = r_inner;
    region.r_outer = r_outer;
    region.n_samples = samples;
    region.seed = region_seed;

    const nlohmann::ordered_json report =
        singopt::conditions_report(p, region, mb_probes, probe_radius);
    std::cout << report.dump(2) << std::endl;
    return 0;
  } catch (const singopt::ConfigError& e) {
    std::cerr << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
