#include "singopt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "singopt/analysis.hpp"
#include "singopt/errors.hpp"
#include "singopt/toml_lite.hpp"

namespace singopt {

namespace {

using nlohmann::ordered_json;

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double json_safe(double v) { return v; }

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

// ---- config loading ----------------------------------------------------

const toml::Value* find(const toml::Table& t, const std::string& key) {
  auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

double need_number(const toml::Table& t, const std::string& key, const std::string& where) {
  const toml::Value* v = find(t, key);
  if (!v || !v->is_number()) throw ConfigError("config: missing number '" + where + "'");
  return v->as_double();
}

double number_or(const toml::Table& t, const std::string& key, double fallback) {
  const toml::Value* v = find(t, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return v->as_double();
}

std::int64_t int_or(const toml::Table& t, const std::string& key, std::int64_t fallback) {
  const toml::Value* v = find(t, key);
  if (!v) return fallback;
  if (!v->is_int()) throw ConfigError("config: '" + key + "' must be an integer");
  return v->as_int();
}

bool bool_or(const toml::Table& t, const std::string& key, bool fallback) {
  const toml::Value* v = find(t, key);
  if (!v) return fallback;
  if (!v->is_bool()) throw ConfigError("config: '" + key + "' must be a boolean");
  return v->as_bool();
}

std::string string_or(const toml::Table& t, const std::string& key, std::string fallback) {
  const toml::Value* v = find(t, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError("config: '" + key + "' must be a string");
  return v->as_string();
}

Eigen::VectorXd need_vector(const toml::Value& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("config: '" + where + "' must be an array of numbers");
  const auto& arr = v.as_array();
  Eigen::VectorXd out(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ConfigError("config: '" + where + "' must hold numbers");
    out[i] = arr[i].as_double();
  }
  return out;
}

SolverConfig parse_solver(const toml::Table& t, size_t index) {
  SolverConfig cfg;
  const std::string where = "solver[" + std::to_string(index) + "]";
  const std::string algo = string_or(t, "algorithm", "");
  if (algo == "gd") {
    cfg.algorithm = Algorithm::GD;
    const std::string mode = string_or(t, "step", "constant");
    if (mode == "constant") {
      cfg.gd.mode = GDStepMode::Constant;
      cfg.gd.gamma = need_number(t, "gamma", where + ".gamma");
    } else if (mode == "armijo") {
      cfg.gd.mode = GDStepMode::Armijo;
      cfg.gd.alpha_bar = number_or(t, "alpha_bar", cfg.gd.alpha_bar);
      cfg.gd.beta = number_or(t, "beta", cfg.gd.beta);
      cfg.gd.sigma_armijo = number_or(t, "sigma_armijo", cfg.gd.sigma_armijo);
    } else {
      throw ConfigError("config: " + where + ".step must be 'constant' or 'armijo'");
    }
  } else if (algo == "newton") {
    cfg.algorithm = Algorithm::Newton;
    cfg.newton.rank_tol = number_or(t, "rank_tol", cfg.newton.rank_tol);
  } else if (algo == "arc") {
    cfg.algorithm = Algorithm::ARC;
    auto& a = cfg.arc;
    a.sigma0 = number_or(t, "sigma0", a.sigma0);
    a.sigma_min = number_or(t, "sigma_min", a.sigma_min);
    a.rho_c = number_or(t, "rho_c", a.rho_c);
    a.gamma_inc = number_or(t, "gamma_inc", a.gamma_inc);
    a.gamma_dec = number_or(t, "gamma_dec", a.gamma_dec);
    a.kappa = number_or(t, "kappa", a.kappa);
    a.beta_h_budget = number_or(t, "beta_h_budget", a.beta_h_budget);
    a.perturb_seed = static_cast<std::uint64_t>(int_or(t, "perturb_seed", 0));
    const std::string mode = string_or(t, "subsolver", "exact_secular");
    if (mode == "exact_secular") {
      a.subsolver = CubicMode::ExactSecular;
    } else if (mode == "inexact_gradient") {
      a.subsolver = CubicMode::InexactGradient;
    } else {
      throw ConfigError("config: " + where + ".subsolver must be 'exact_secular' or 'inexact_gradient'");
    }
  } else if (algo == "rtr") {
    cfg.algorithm = Algorithm::RTR;
    auto& r = cfg.rtr;
    r.delta0 = number_or(t, "delta0", r.delta0);
    r.delta_bar = number_or(t, "delta_bar", r.delta_bar);
    r.rho_prime = number_or(t, "rho_prime", r.rho_prime);
    r.kappa_tcg = number_or(t, "kappa_tcg", r.kappa_tcg);
    r.theta_tcg = number_or(t, "theta_tcg", r.theta_tcg);
    r.tcg_max_iter = static_cast<int>(int_or(t, "tcg_max_iter", 0));
    const std::string sub = string_or(t, "subsolver", "cauchy");
    if (sub == "cauchy") {
      r.subsolver = RtrSubsolver::Cauchy;
    } else if (sub == "exact") {
      r.subsolver = RtrSubsolver::Exact;
    } else if (sub == "tcg") {
      r.subsolver = RtrSubsolver::Tcg;
    } else {
      throw ConfigError("config: " + where + ".subsolver must be 'cauchy', 'exact', or 'tcg'");
    }
  } else {
    throw ConfigError("config: " + where + ".algorithm must be one of gd|newton|arc|rtr");
  }
  cfg.grad_tol = number_or(t, "grad_tol", cfg.grad_tol);
  cfg.max_iters = static_cast<int>(int_or(t, "max_iters", cfg.max_iters));
  cfg.record_points = bool_or(t, "record_points", cfg.record_points);
  cfg.name = string_or(t, "name", "");
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + where + ": " + e.what());
  }
  return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  toml::Table root;
  try {
    root = toml::parse_file(path);
  } catch (const toml::ParseError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.config_path = path;
  cfg.seed = static_cast<std::uint64_t>(int_or(root, "seed", 0));
  cfg.output_dir = string_or(root, "output_dir", "out");

  const toml::Value* prob = find(root, "problem");
  if (!prob || !prob->is_table()) throw ConfigError("config: missing [problem] table");
  const toml::Table& pt = prob->as_table();
  cfg.problem.name = string_or(pt, "name", "");
  if (cfg.problem.name.empty()) throw ConfigError("config: problem.name is required");
  cfg.problem.seed = static_cast<std::uint64_t>(int_or(pt, "seed", 0));
  for (const auto& [key, value] : pt) {
    if (key == "name" || key == "seed") continue;
    if (!value.is_number()) throw ConfigError("config: problem." + key + " must be a number");
    cfg.problem.params[key] = value.as_double();
  }

  const toml::Value* solvers = find(root, "solver");
  if (!solvers || !solvers->is_array() || solvers->as_array().empty()) {
    throw ConfigError("config: at least one [[solver]] table is required");
  }
  size_t idx = 0;
  for (const auto& entry : solvers->as_array()) {
    if (!entry.is_table()) throw ConfigError("config: [[solver]] entries must be tables");
    cfg.solvers.push_back(parse_solver(entry.as_table(), idx++));
  }

  const toml::Value* x0 = find(root, "x0");
  if (!x0 || !x0->is_table()) throw ConfigError("config: missing [x0] table");
  const toml::Table& xt = x0->as_table();
  if (const toml::Value* coords = find(xt, "coords")) {
    cfg.x0.is_explicit = true;
    cfg.x0.coords = need_vector(*coords, "x0.coords");
  } else if (find(xt, "near_S")) {
    cfg.x0.is_explicit = false;
    cfg.x0.near_s_radius = need_number(xt, "near_S", "x0.near_S");
    cfg.x0.seed = static_cast<std::uint64_t>(int_or(xt, "seed", cfg.seed + 1));
  } else {
    throw ConfigError("config: [x0] needs either coords or near_S");
  }

  if (const toml::Value* an = find(root, "analyses")) {
    if (!an->is_table()) throw ConfigError("config: [analyses] must be a table");
    const toml::Table& at = an->as_table();
    cfg.analyses.rate = bool_or(at, "rate", cfg.analyses.rate);
    cfg.analyses.decrease = bool_or(at, "decrease", cfg.analyses.decrease);
    cfg.analyses.conditions = bool_or(at, "conditions", cfg.analyses.conditions);
    cfg.analyses.mb_check = bool_or(at, "mb_check", cfg.analyses.mb_check);
    cfg.analyses.mb_probes = static_cast<int>(int_or(at, "mb_probes", cfg.analyses.mb_probes));
    cfg.analyses.mb_probe_radius =
        number_or(at, "mb_probe_radius", cfg.analyses.mb_probe_radius);
    if (const toml::Value* reg = find(at, "region")) {
      if (!reg->is_table()) throw ConfigError("config: [analyses.region] must be a table");
      const toml::Table& rt = reg->as_table();
      RegionParams rp;
      if (const toml::Value* center = find(rt, "center")) {
        rp.center = need_vector(*center, "analyses.region.center");
      }
      rp.r_inner = number_or(rt, "r_inner", rp.r_inner);
      rp.r_outer = number_or(rt, "r_outer", rp.r_outer);
      rp.samples = static_cast<int>(int_or(rt, "samples", rp.samples));
      rp.seed = static_cast<std::uint64_t>(int_or(rt, "seed", cfg.seed + 2));
      rp.eps_f = number_or(rt, "eps_f", rp.eps_f);
      cfg.analyses.region = rp;
    }
  }
  if (cfg.analyses.decrease && !cfg.analyses.conditions) {
    throw ConfigError(
        "config: analyses.decrease needs analyses.conditions (the path-length bound "
        "uses the estimated PL constant)");
  }

  // Unique CSV stems.
  std::vector<std::string> taken;
  for (auto& s : cfg.solvers) {
    std::string base = s.name.empty() ? algorithm_name(s.algorithm) : s.name;
    std::string candidate = base;
    int suffix = 2;
    while (std::find(taken.begin(), taken.end(), candidate) != taken.end()) {
      candidate = base + "_" + std::to_string(suffix++);
    }
    s.name = candidate;
    taken.push_back(candidate);
  }
  return cfg;
}

Point resolve_x0(const Problem& p, const X0Spec& spec) {
  if (spec.is_explicit) {
    try {
      return make_point(p.manifold, spec.coords);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: bad x0 coordinates: ") + e.what());
    }
  }
  if (!p.oracle || !p.oracle->project_to_S) {
    throw ConfigError("config: x0.near_S needs a problem with a projection oracle");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = p.manifold.ambient_dim;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = gauss(rng);
    Point probe = p.manifold.kind == ManifoldKind::UnitSphere
                      ? make_point(p.manifold, (z / z.norm()).eval())
                      : make_point(p.manifold, z);
    const Point anchor = p.oracle->project_to_S(probe);
    Tangent away;
    try {
      away = log_map(anchor, probe);
    } catch (const std::domain_error&) {
      continue;
    }
    const double n_away = away.norm();
    if (n_away < 1e-8) continue;
    const Tangent v = make_tangent(anchor, (spec.near_s_radius / n_away * away.vec).eval());
    return exp_map(anchor, v);
  }
  throw ConfigError("config: failed to sample x0 near the solution set");
}

std::string trace_to_csv(const Trace& trace) {
  std::ostringstream out;
  out << "k,f,grad_norm,dist_S,step_norm,ratio,reg,accepted\n";
  for (const auto& r : trace.rows) {
    out << r.k << ',' << fmt_double(r.f) << ',' << fmt_double(r.grad_norm) << ','
        << fmt_double(r.dist_S) << ',' << fmt_double(r.step_norm) << ','
        << fmt_double(r.ratio) << ',' << fmt_double(r.reg) << ',' << (r.accepted ? 1 : 0)
        << '\n';
  }
  return out.str();
}

namespace {

ordered_json rate_report_json(const RateReport& r) {
  return ordered_json{{"order_q", json_safe(r.order_q)},
                      {"rate_c", json_safe(r.rate_c)},
                      {"window_begin", r.window_begin},
                      {"window_end", r.window_end},
                      {"fit_residual", json_safe(r.fit_residual)},
                      {"classification", rate_class_name(r.classification)}};
}

ordered_json estimate_json(const ConditionEstimate& e) {
  ordered_json j{{"kind", condition_kind_name(e.kind)},
                 {"mu_hat", e.mu_hat},
                 {"n_used", e.n_used},
                 {"argmin_sample", vector_to_json(e.argmin_sample.coords)}};
  if (e.theta_hat) j["theta_hat"] = *e.theta_hat;
  return j;
}

ordered_json rate_or_error(const std::vector<double>& errors) {
  try {
    return rate_report_json(fit_rate(errors));
  } catch (const std::exception& e) {
    return ordered_json{{"error", e.what()}};
  }
}

}  // namespace

nlohmann::ordered_json conditions_report(const Problem& p, const RegionSpec& region,
                                         int mb_probes, double mb_probe_radius) {
  ordered_json out;
  std::vector<ConditionEstimate> ests;
  auto record = [&](const char* key, auto&& fn) {
    try {
      ConditionEstimate e = fn();
      out["estimates"][key] = estimate_json(e);
      ests.push_back(std::move(e));
    } catch (const std::exception& err) {
      out["estimates"][key] = ordered_json{{"error", err.what()}};
    }
  };
  record("pl", [&] { return estimate_pl(p, region); });
  record("eb", [&] { return estimate_eb(p, region); });
  record("qg", [&] { return estimate_qg(p, region); });
  record("rsi", [&] { return estimate_rsi(p, region); });
  record("loja", [&] { return fit_loja_exponent(p, region); });

  std::optional<MBReport> mb;
  if (p.has_hessian() && p.oracle && p.oracle->project_to_S) {
    try {
      const Point anchor = p.oracle->project_to_S(region.center);
      mb = check_mb(p, anchor, mb_probes, mb_probe_radius, region.seed + 17);
      ordered_json mj{{"anchor", vector_to_json(mb->anchor.coords)},
                      {"eigenvalues", vector_to_json(mb->eigenvalues)},
                      {"numerical_rank_d", mb->numerical_rank_d},
                      {"mu_mb", mb->mu_mb},
                      {"kernel_dim", mb->kernel_dim},
                      {"rank_constant_along_S", mb->rank_constant_along_S},
                      {"dim_S", p.oracle->dim_S},
                      {"solution_set_is_manifold", p.oracle->solution_set_is_manifold}};
      if (std::isfinite(mb->tangent_alignment_err)) {
        mj["tangent_alignment_err"] = mb->tangent_alignment_err;
      }
      out["mb"] = std::move(mj);
    } catch (const std::exception& err) {
      out["mb"] = ordered_json{{"error", err.what()}};
    }
  } else {
    out["mb"] = ordered_json{{"skipped", p.has_hessian() ? "no oracle" : "C1 problem"}};
    if (p.oracle) {
      out["mb"]["solution_set_is_manifold"] = p.oracle->solution_set_is_manifold;
    }
  }

  if (ests.size() >= 3 && mb) {
    try {
      const ImplicationTable table = verify_implications(ests, *mb);
      ordered_json edges = ordered_json::array();
      for (const auto& e : table.edges) {
        edges.push_back(ordered_json{
            {"edge", e.name}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"pass", e.pass}});
      }
      out["implications"] = ordered_json{{"edges", std::move(edges)},
                                         {"all_pass", table.all_pass}};
    } catch (const std::exception& err) {
      out["implications"] = ordered_json{{"error", err.what()}};
    }
  }
  return out;
}

namespace {

int thread_budget(size_t n_runs) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap <= 0) cap = 1;
  if (const char* env = std::getenv("SINGOPT_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) cap = requested;
  }
  return std::min<int>(cap, static_cast<int>(n_runs));
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, const std::string& out_override) {
  const Problem p = build_problem(cfg.problem);
  const Point x0 = resolve_x0(p, cfg.x0);

  namespace fs = std::filesystem;
  const fs::path out_dir = out_override.empty() ? fs::path(cfg.output_dir)
                                                : fs::path(out_override);
  fs::create_directories(out_dir);

  // Decrease analysis needs iterate distances, so force point recording.
  std::vector<SolverConfig> solver_cfgs = cfg.solvers;
  if (cfg.analyses.decrease) {
    for (auto& s : solver_cfgs) s.record_points = true;
  }

  std::vector<Trace> traces(solver_cfgs.size());
  const int n_threads = thread_budget(solver_cfgs.size());
  if (n_threads <= 1) {
    for (size_t i = 0; i < solver_cfgs.size(); ++i) {
      traces[i] = run_solver(p, x0, solver_cfgs[i]);
    }
  } else {
    std::vector<std::thread> workers;
    std::atomic<size_t> next{0};
    for (int t = 0; t < n_threads; ++t) {
      workers.emplace_back([&] {
        while (true) {
          const size_t i = next.fetch_add(1);
          if (i >= solver_cfgs.size()) break;
          traces[i] = run_solver(p, x0, solver_cfgs[i]);
        }
      });
    }
    for (auto& w : workers) w.join();
  }

  bool diverged = false;
  ordered_json summary;
  summary["version"] = "0.1.0";
  summary["timestamp"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  summary["seed"] = cfg.seed;
  summary["config_path"] = cfg.config_path;
  summary["problem"] = ordered_json{{"name", cfg.problem.name}, {"seed", cfg.problem.seed}};
  for (const auto& [k, v] : cfg.problem.params) summary["problem"][k] = v;
  summary["x0"] = vector_to_json(x0.coords);
  if (!cfg.x0.is_explicit) {
    summary["x0_spec"] = ordered_json{{"near_S", cfg.x0.near_s_radius}, {"seed", cfg.x0.seed}};
  }

  // Landscape conditions (shared across solvers).
  std::optional<double> mu_pl_for_bpl;
  if (cfg.analyses.conditions) {
    RegionSpec region;
    RegionParams rp = cfg.analyses.region.value_or(RegionParams{});
    if (rp.center.size() == 0) {
      if (p.oracle && p.oracle->project_to_S) {
        rp.center = p.oracle->project_to_S(x0).coords;
      } else {
        rp.center = x0.coords;
      }
    }
    try {
      region.center = make_point(p.manifold, rp.center);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: analyses.region.center: ") + e.what());
    }
    region.r_inner = rp.r_inner;
    region.r_outer = rp.r_outer;
    region.n_samples = rp.samples;
    region.seed = rp.seed;
    region.eps_f = rp.eps_f;
    summary["conditions"] = conditions_report(
        p, region, cfg.analyses.mb_check ? cfg.analyses.mb_probes : 0,
        cfg.analyses.mb_probe_radius);
    const auto& est = summary["conditions"]["estimates"];
    if (est.contains("pl") && est["pl"].contains("mu_hat")) {
      mu_pl_for_bpl = est["pl"]["mu_hat"].get<double>();
    }
  }

  summary["solvers"] = ordered_json::array();
  for (size_t i = 0; i < traces.size(); ++i) {
    const Trace& tr = traces[i];
    diverged = diverged || tr.termination == Termination::Diverged;

    std::ofstream csv(out_dir / ("trace_" + tr.solver_name + ".csv"), std::ios::binary);
    csv << trace_to_csv(tr);

    ordered_json sj;
    sj["name"] = tr.solver_name;
    sj["algorithm"] = algorithm_name(solver_cfgs[i].algorithm);
    sj["termination"] = termination_name(tr.termination);
    sj["iterations"] = tr.iterations();
    const IterRecord& last = tr.rows.back();
    sj["final"] = ordered_json{{"f", json_safe(last.f)},
                               {"grad_norm", json_safe(last.grad_norm)},
                               {"dist_S", json_safe(last.dist_S)},
                               {"point", vector_to_json(tr.final_point.coords)}};
    if (cfg.analyses.rate) {
      if (p.oracle) sj["rate_dist_S"] = rate_or_error(tr.dist_sequence());
      sj["rate_grad_norm"] = rate_or_error(tr.grad_norm_sequence());
    }
    if (cfg.analyses.decrease && mu_pl_for_bpl) {
      try {
        const DecreaseReport d = measure_decrease(tr, p, 0.5, *mu_pl_for_bpl);
        sj["decrease"] = ordered_json{{"omega_hat", json_safe(d.omega_hat)},
                                      {"sigma_hat", json_safe(d.sigma_hat)},
                                      {"path_length", json_safe(d.path_length)},
                                      {"bpl_bound", json_safe(d.bpl_bound)},
                                      {"violations", d.violations}};
      } catch (const std::exception& e) {
        sj["decrease"] = ordered_json{{"error", e.what()}};
      }
    }
    summary["solvers"].push_back(std::move(sj));
  }

  std::ofstream js(out_dir / "summary.json", std::ios::binary);
  js << summary.dump(2) << '\n';
  return diverged ? 2 : 0;
}

}  // namespace singopt
