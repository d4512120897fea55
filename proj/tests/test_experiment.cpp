#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "singopt/errors.hpp"
#include "singopt/experiment.hpp"

using namespace singopt;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "singopt_test_configs";
  fs::create_directories(dir);
  const fs::path file = dir / name;
  std::ofstream out(file);
  out << body;
  return file;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kCircleConfig = R"(
seed = 7
output_dir = "unused"

[problem]
name = "circle"

[x0]
coords = [1.3, 0.4]

[[solver]]
algorithm = "arc"
subsolver = "exact_secular"
name = "arc_exact"

[[solver]]
algorithm = "arc"
subsolver = "inexact_gradient"
name = "arc_inexact"

[analyses]
rate = true
decrease = true
conditions = true
mb_check = true

[analyses.region]
center = [1.0, 0.0]
r_outer = 0.05
samples = 2000
seed = 3
)";

}  // namespace

TEST_CASE("run_experiment produces traces and a quadratic summary") {
  const fs::path cfg_path = write_config("circle_arc.toml", kCircleConfig);
  const fs::path out = fs::temp_directory_path() / "singopt_test_run1";
  fs::remove_all(out);
  const ExperimentConfig cfg = load_config(cfg_path.string());
  CHECK(run_experiment(cfg, out.string()) == 0);

  CHECK(fs::exists(out / "trace_arc_exact.csv"));
  CHECK(fs::exists(out / "trace_arc_inexact.csv"));
  const std::string csv = slurp(out / "trace_arc_exact.csv");
  CHECK(csv.rfind("k,f,grad_norm,dist_S,step_norm,ratio,reg,accepted\n", 0) == 0);

  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  for (const auto& solver : summary.at("solvers")) {
    CHECK(solver.at("rate_dist_S").at("classification") == "quadratic");
    CHECK(solver.at("termination") == "grad_tol");
    CHECK(solver.at("decrease").at("violations") == 0);
  }
  CHECK(summary.at("conditions").at("implications").at("all_pass") == true);
  CHECK(summary.at("conditions").at("mb").at("mu_mb").get<double>() == doctest::Approx(8.0));
}

TEST_CASE("identical configs give byte-identical traces") {
  const fs::path cfg_path = write_config("circle_arc.toml", kCircleConfig);
  const ExperimentConfig cfg = load_config(cfg_path.string());
  const fs::path out_a = fs::temp_directory_path() / "singopt_test_run_a";
  const fs::path out_b = fs::temp_directory_path() / "singopt_test_run_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  REQUIRE(run_experiment(cfg, out_a.string()) == 0);
  REQUIRE(run_experiment(cfg, out_b.string()) == 0);
  CHECK(slurp(out_a / "trace_arc_exact.csv") == slurp(out_b / "trace_arc_exact.csv"));
  CHECK(slurp(out_a / "trace_arc_inexact.csv") == slurp(out_b / "trace_arc_inexact.csv"));

  // summaries agree except for the timestamp
  auto sa = nlohmann::json::parse(slurp(out_a / "summary.json"));
  auto sb = nlohmann::json::parse(slurp(out_b / "summary.json"));
  sa.erase("timestamp");
  sb.erase("timestamp");
  CHECK(sa == sb);
}

TEST_CASE("the newton_trap escape shows up in the persisted trace") {
  const fs::path cfg_path = write_config("newton_trap.toml", R"(
[problem]
name = "newton_trap"

[x0]
coords = [0.5744562646538028, 0.1]   # sqrt((1 - t)/3), sqrt(t) at t = 0.01

[[solver]]
algorithm = "newton"
max_iters = 1

[analyses]
rate = false
)");
  const fs::path out = fs::temp_directory_path() / "singopt_test_run2";
  fs::remove_all(out);
  REQUIRE(run_experiment(load_config(cfg_path.string()), out.string()) == 0);
  std::ifstream csv(out / "trace_newton.csv");
  std::string line;
  std::getline(csv, line);  // header
  std::getline(csv, line);  // k = 0
  REQUIRE(std::getline(csv, line));  // k = 1
  std::stringstream ss(line);
  std::string field;
  std::getline(ss, field, ',');
  CHECK(field == "1");
  std::getline(ss, field, ',');  // f
  std::getline(ss, field, ',');  // grad_norm
  std::getline(ss, field, ',');  // dist_S
  const double dist_s = std::stod(field);
  CHECK(std::abs(dist_s - (2.0 / 3.0) * 0.99 / 0.1) <= 1e-9);
}

TEST_CASE("bad configs raise ConfigError") {
  CHECK_THROWS_AS(load_config("/nonexistent/path.toml"), ConfigError);

  const fs::path no_problem = write_config("no_problem.toml", R"(
[x0]
coords = [0.0]
[[solver]]
algorithm = "gd"
gamma = 0.1
)");
  CHECK_THROWS_AS(load_config(no_problem.string()), ConfigError);

  const fs::path no_solver = write_config("no_solver.toml", R"(
[problem]
name = "circle"
[x0]
coords = [1.0, 0.0]
)");
  CHECK_THROWS_AS(load_config(no_solver.string()), ConfigError);

  const fs::path bad_algo = write_config("bad_algo.toml", R"(
[problem]
name = "circle"
[x0]
coords = [1.0, 0.0]
[[solver]]
algorithm = "sgd"
)");
  CHECK_THROWS_AS(load_config(bad_algo.string()), ConfigError);

  const fs::path bad_gamma = write_config("bad_gamma.toml", R"(
[problem]
name = "circle"
[x0]
coords = [1.0, 0.0]
[[solver]]
algorithm = "gd"
)");
  CHECK_THROWS_AS(load_config(bad_gamma.string()), ConfigError);
}

TEST_CASE("unknown problem names surface as ConfigError exit-1 material") {
  const fs::path cfg_path = write_config("unknown.toml", R"(
[problem]
name = "mystery"
[x0]
coords = [0.0]
[[solver]]
algorithm = "gd"
gamma = 0.1
)");
  const ExperimentConfig cfg = load_config(cfg_path.string());
  CHECK_THROWS_AS(run_experiment(cfg, "/tmp/singopt_unused"), std::invalid_argument);
}

TEST_CASE("x0 near_S sampling lands at the requested distance") {
  for (const char* name : {"circle", "burer_monteiro", "sphere_band"}) {
    ProblemSpec spec{name, {}, 4};
    const Problem p = build_problem(spec);
    X0Spec x0;
    x0.is_explicit = false;
    x0.near_s_radius = 0.2;
    x0.seed = 12;
    const Point pt = resolve_x0(p, x0);
    INFO(name);
    CHECK(p.oracle->dist_to_S(pt) == doctest::Approx(0.2).epsilon(0.02));
  }
}

TEST_CASE("divergent runs exit with code 2") {
  const fs::path cfg_path = write_config("diverge.toml", R"(
[problem]
name = "circle"
[x0]
coords = [2.0, 0.0]
[[solver]]
algorithm = "gd"
gamma = 1e200
[analyses]
rate = false
)");
  const fs::path out = fs::temp_directory_path() / "singopt_test_run3";
  fs::remove_all(out);
  CHECK(run_experiment(load_config(cfg_path.string()), out.string()) == 2);
}

TEST_CASE("SINGOPT_THREADS caps workers without changing the artifacts") {
  const fs::path cfg_path = write_config("circle_arc.toml", kCircleConfig);
  const ExperimentConfig cfg = load_config(cfg_path.string());
  const fs::path out_seq = fs::temp_directory_path() / "singopt_test_seq";
  const fs::path out_par = fs::temp_directory_path() / "singopt_test_par";
  fs::remove_all(out_seq);
  fs::remove_all(out_par);
  setenv("SINGOPT_THREADS", "1", 1);
  REQUIRE(run_experiment(cfg, out_seq.string()) == 0);
  setenv("SINGOPT_THREADS", "4", 1);
  REQUIRE(run_experiment(cfg, out_par.string()) == 0);
  unsetenv("SINGOPT_THREADS");
  CHECK(slurp(out_seq / "trace_arc_exact.csv") == slurp(out_par / "trace_arc_exact.csv"));
  CHECK(slurp(out_seq / "trace_arc_inexact.csv") == slurp(out_par / "trace_arc_inexact.csv"));
}

TEST_CASE("duplicate solver names get unique suffixes") {
  const fs::path cfg_path = write_config("dups.toml", R"(
[problem]
name = "circle"
[x0]
coords = [1.2, 0.0]
[[solver]]
algorithm = "arc"
[[solver]]
algorithm = "arc"
subsolver = "inexact_gradient"
)");
  const ExperimentConfig cfg = load_config(cfg_path.string());
  CHECK(cfg.solvers[0].name == "arc");
  CHECK(cfg.solvers[1].name == "arc_2");
}
