// Scenario runner: propagates the classical flow, builds the expansion,
// assembles the cutoff ansatz, certifies it against the split-operator
// solver, and emits tables and plot data.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hagprop/reference_solver.hpp"
#include "hagprop/scenario.hpp"
#include "hagprop/truncation_lab.hpp"
#include "hagprop/validation.hpp"

namespace fs = std::filesystem;
using namespace hagprop;

namespace {

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig c;
  if (name == "trivial_adiabatic") {
    c.id = "trivial_adiabatic";
    c.model_id = "trivial_adiabatic";
    c.delta = 1.0;
    c.omega = 1.0;
    c.a0 = 1.0;
    c.N_max = 6;
    c.n_t = 201;
    c.h_w = 0.2;
    c.T = 1.0;
    c.eps_list = {0.1};
    c.floor_tol = 1e-8;
  } else if (name == "avoided_crossing") {
    c.id = "avoided_crossing";
    c.model_id = "avoided_crossing";
    c.delta = 0.5;
    c.omega = 1.6;
    c.a0 = 1.0;
    c.N_max = 10;
    c.n_t = 801;
    c.h_w = 0.05;
    c.T = 1.0;
    c.eps_list = {0.35, 0.3, 0.25, 0.2, 0.15};
    c.fixed_N = {1, 2, 3};
    c.floor_tol = 1e-7;
  } else {
    throw ConfigError("unknown scenario preset: " + name);
  }
  return c;
}

int thread_count(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("HAGPROP_THREADS")) return std::max(1, std::atoi(env));
  return 1;
}

void write_growth_csv(const Scenario& sc, const std::string& path) {
  auto rep = sc.engine->growth_report();
  std::ofstream out(path);
  out << "n,sup_norm\n";
  char buf[80];
  for (std::size_t n = 0; n < rep.s.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", n, rep.s[n]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "# fitted tau = %.17g\n", rep.tau);
  out << buf;
}

void write_residual_series(const Scenario& sc, double eps, int N, const std::string& path) {
  XGrid grid = make_xgrid(sc, eps, ExpansionEngine::c_degree(sc.cfg.J, N));
  SplitOperatorSolver solver(*sc.model, grid, eps);
  Ansatz an(*sc.engine, *sc.cutoff, eps, N);
  DuhamelReport rep = duhamel_scan(an, solver, sc.cfg.duhamel_probes);
  GridState psi0 = an.evaluate(0.0, grid);
  double dt0 = (sc.cfg.solver_dt > 0) ? sc.cfg.solver_dt : sc.cfg.T / 16384.0;
  GridState psiT = solver.propagate(psi0, sc.cfg.T, dt0);
  std::ofstream out(path);
  out << "t,norm,error,residual\n";
  char buf[160];
  for (const auto& [t, xi] : rep.xi) {
    GridState hat = an.evaluate(t, grid);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t, hat.norm(),
                  (t == sc.cfg.T) ? error_norm(psiT, hat) : -1.0, xi);
    out << buf;
  }
}

int cmd_run(const ScenarioConfig& cfg, int threads) {
  Scenario sc = build_scenario(cfg);
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream mf(cfg.out_dir + "/manifest.json");
    mf << manifest_json(sc) << "\n";
  }
  sc.traj.write_csv(cfg.out_dir + "/trajectory.csv");
  write_growth_csv(sc, cfg.out_dir + "/growth.csv");

  EpsSweepResult res = sweep_epsilon(sc, threads);
  write_sweep_csv(res, cfg.out_dir + "/sweep.csv");
  write_sweep_json(res, cfg.out_dir + "/sweep.json");

  // binary snapshots for the first eps at its best order
  const auto& c0 = res.curves.front();
  int Nbest = (c0.argmin_N >= 0) ? c0.argmin_N : 0;
  XGrid grid = make_xgrid(sc, c0.eps, ExpansionEngine::c_degree(cfg.J, Nbest));
  Ansatz an(*sc.engine, *sc.cutoff, c0.eps, Nbest);
  write_grid_state(an.evaluate(0.0, grid), cfg.out_dir + "/ansatz_t0.hgst");
  write_grid_state(an.evaluate(cfg.T, grid), cfg.out_dir + "/ansatz_T.hgst");
  write_residual_series(sc, c0.eps, Nbest, cfg.out_dir + "/series.csv");

  std::printf("scenario %s: %zu eps values, fitted Gamma = %.6g (r2 = %.4g)\n", cfg.id.c_str(),
              res.curves.size(), res.fit.Gamma, res.fit.r2);
  for (const auto& c : res.curves)
    std::printf("  eps = %-5g min error = %.6g at N = %d (floor %.3g)\n", c.eps, c.min_error,
                c.argmin_N, c.floor);
  return 0;
}

int cmd_validate(bool quick, bool inject) {
  ValidationOptions opt;
  opt.quick = quick;
  opt.inject_cond1_violation = inject;
  auto results = run_property_suite(opt);
  int failures = 0;
  for (const auto& r : results) {
    std::printf("%-45s %-6s defect %.3e (tol %.1e)%s%s\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.defect, r.tolerance, r.note.empty() ? "" : "  ",
                r.note.c_str());
    if (!r.pass) ++failures;
  }
  std::printf("%d/%zu checks passed\n", static_cast<int>(results.size()) - failures,
              results.size());
  return failures == 0 ? 0 : 1;
}

int cmd_sweep_orders(const ScenarioConfig& cfg, int threads) {
  Scenario sc = build_scenario(cfg);
  fs::create_directories(cfg.out_dir);
  std::vector<int> N_list;
  for (int N = 0; N <= cfg.N_max; ++N) N_list.push_back(N);
  EpsSweepResult res;
  res.scenario_id = cfg.id;
  (void)threads;
  for (double eps : cfg.eps_list) {
    OrderCurve c = sweep_orders(sc, eps, N_list);
    std::printf("eps = %-5g argmin N = %d min error = %.6g interior=%d\n", eps, c.argmin_N,
                c.min_error, static_cast<int>(c.has_interior_minimum()));
    res.curves.push_back(std::move(c));
  }
  write_sweep_csv(res, cfg.out_dir + "/orders.csv");
  return 0;
}

int cmd_sweep_epsilon(const ScenarioConfig& cfg, int threads) {
  Scenario sc = build_scenario(cfg);
  fs::create_directories(cfg.out_dir);
  EpsSweepResult res = sweep_epsilon(sc, threads);
  write_sweep_csv(res, cfg.out_dir + "/sweep.csv");
  write_sweep_json(res, cfg.out_dir + "/sweep.json");
  std::printf("Gamma = %.8g  C = %.8g  r2 = %.6g  rss_exp %.4g vs rss_pow %.4g\n", res.fit.Gamma,
              res.fit.C, res.fit.r2, res.fit.rss_exp, res.fit.rss_pow);
  return 0;
}

int cmd_localization(const ScenarioConfig& cfg) {
  Scenario sc = build_scenario(cfg);
  fs::create_directories(cfg.out_dir);
  LocalizationResult loc = localization_sweep(sc, cfg.loc_b, cfg.loc_eps, cfg.T);
  std::ofstream out(cfg.out_dir + "/localization.csv");
  out << "eps,mass,oracle\n";
  char buf[120];
  for (const auto& r : loc.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.eps, r.mass, r.oracle);
    out << buf;
  }
  std::printf("localization slope %.6g (oracle %.6g) over %zu eps values\n", loc.slope,
              loc.oracle_slope, loc.rows.size());
  return 0;
}

int cmd_emit_plot_data(const ScenarioConfig& cfg, int threads) {
  Scenario sc = build_scenario(cfg);
  fs::create_directories(cfg.out_dir);
  EpsSweepResult res = sweep_epsilon(sc, threads);
  char buf[160];
  for (const auto& c : res.curves) {
    std::snprintf(buf, sizeof buf, "%s/error_vs_N_eps%g.dat", cfg.out_dir.c_str(), c.eps);
    std::ofstream out(buf);
    for (const auto& r : c.rows) {
      std::snprintf(buf, sizeof buf, "%d %.17g\n", r.N, r.error);
      out << buf;
    }
  }
  {
    std::ofstream out(cfg.out_dir + "/minerr_vs_inveps2.dat");
    for (const auto& c : res.curves) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", 1.0 / (c.eps * c.eps), c.min_error);
      out << buf;
    }
  }
  std::printf("plot data written to %s\n", cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semiclassical wave packet propagation for the time-dependent "
               "Born-Oppenheimer approximation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, scenario_name;
  int threads = 0;
  bool quick = false, inject = false;
  app.add_option("--config", config_path, "scenario config file (key=value or JSON)");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--threads", threads, "worker threads (default HAGPROP_THREADS or 1)");
  app.add_option("--scenario", scenario_name, "named preset instead of --config");

  auto* run = app.add_subcommand("run", "full pipeline: flow, expansion, solver, sweeps");
  auto* val = app.add_subcommand("validate", "run the property suites of all modules");
  val->add_flag("--quick", quick, "trim the slowest checks");
  val->add_flag("--inject-cond1-violation", inject, "targeted broken fixture");
  auto* sor = app.add_subcommand("sweep-orders", "error vs N at each eps");
  auto* sep = app.add_subcommand("sweep-epsilon", "optimal truncation sweep and fits");
  auto* loc = app.add_subcommand("localization", "order-0 mass outside |X-a(t)| > b");
  auto* pd = app.add_subcommand("emit-plot-data", "two-column plot files");

  CLI11_PARSE(app, argc, argv);

  try {
    ScenarioConfig cfg;
    if (!app.got_subcommand(val)) {
      if (!config_path.empty()) cfg = parse_config(config_path);
      else if (!scenario_name.empty()) cfg = preset(scenario_name);
      else throw ConfigError("need --config or --scenario");
      if (!out_dir.empty()) cfg.out_dir = out_dir;
    }
    const int nthreads = thread_count(threads);
    if (app.got_subcommand(run)) return cmd_run(cfg, nthreads);
    if (app.got_subcommand(val)) return cmd_validate(quick, inject);
    if (app.got_subcommand(sor)) return cmd_sweep_orders(cfg, nthreads);
    if (app.got_subcommand(sep)) return cmd_sweep_epsilon(cfg, nthreads);
    if (app.got_subcommand(loc)) return cmd_localization(cfg);
    if (app.got_subcommand(pd)) return cmd_emit_plot_data(cfg, nthreads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::system_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const GapCollapseError& e) {
    std::cerr << "gap collapse: " << e.what() << " at X = " << e.X << " (gap " << e.gap << ")\n";
    return 4;
  } catch (const RegionExitError& e) {
    std::cerr << "region exit at t = " << e.t_exit << "\n";
    return 5;
  } catch (const ResolutionError& e) {
    std::cerr << "resolution: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
