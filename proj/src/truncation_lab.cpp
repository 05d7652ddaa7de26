#include "hagprop/truncation_lab.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>

#include <json.hpp>

namespace hagprop {

int optimal_N(double eps, double g) {
  double x = (g * g) / (eps * eps);
  double r = std::nearbyint(x);
  if (std::abs(x - r) < 1e-9) return static_cast<int>(r);
  return static_cast<int>(std::floor(x));
}

bool OrderCurve::has_interior_minimum() const {
  if (rows.size() < 3 || argmin_N < 0) return false;
  return argmin_N != rows.front().N && argmin_N != rows.back().N;
}

OrderCurve sweep_orders(const Scenario& sc, double eps, const std::vector<int>& N_list) {
  OrderCurve curve;
  curve.eps = eps;
  const int N_top = *std::max_element(N_list.begin(), N_list.end());
  const int max_degree = ExpansionEngine::c_degree(sc.cfg.J, N_top);
  XGrid grid = make_xgrid(sc, eps, max_degree);
  SplitOperatorSolver solver(*sc.model, grid, eps);
  solver.check_resolution(sc.traj, sc.b1, max_degree);

  const double T = sc.cfg.T;
  double dt0 = (sc.cfg.solver_dt > 0) ? sc.cfg.solver_dt : T / 16384.0;

  // floor estimate once, at the highest requested order
  Ansatz top(*sc.engine, *sc.cutoff, eps, N_top);
  GridState ic_top = top.evaluate(0.0, grid);
  auto fl = solver.propagate_with_floor(ic_top, T, dt0, sc.cfg.floor_tol, sc.cfg.max_halvings);
  curve.floor = fl.floor_estimate;
  const double dt_used = fl.dt_used;

  double best = 1e300;
  for (int N : N_list) {
    auto tic = std::chrono::steady_clock::now();
    Ansatz an(*sc.engine, *sc.cutoff, eps, N);
    GridState psi0 = an.evaluate(0.0, grid);
    GridState psiT = (N == N_top) ? fl.psi : solver.propagate(psi0, T, dt_used);
    GridState hatT = an.evaluate(T, grid);
    double err = error_norm(psiT, hatT);
    DuhamelReport rep = duhamel_scan(an, solver, sc.cfg.duhamel_probes);
    auto toc = std::chrono::steady_clock::now();
    SweepRow row;
    row.eps = eps;
    row.N = N;
    row.error = err;
    row.bound = rep.bound;
    row.floor = curve.floor;
    row.runtime_s = std::chrono::duration<double>(toc - tic).count();
    curve.rows.push_back(row);
    if (err < best) {
      best = err;
      curve.argmin_N = N;
      curve.min_error = err;
    }
  }
  return curve;
}

ExpFit fit_exponential(const std::vector<std::pair<double, double>>& eps_err,
                       const std::vector<double>& floors) {
  ExpFit fit;
  std::vector<double> xs, ys, xp;
  for (std::size_t i = 0; i < eps_err.size(); ++i) {
    double err = eps_err[i].second;
    double fl = (i < floors.size()) ? floors[i] : 0.0;
    if (err <= 10.0 * fl) continue;  // too close to the solver floor
    xs.push_back(1.0 / (eps_err[i].first * eps_err[i].first));
    xp.push_back(std::log(eps_err[i].first));
    ys.push_back(std::log(err));
  }
  fit.n_points = static_cast<int>(xs.size());
  if (fit.n_points < 2) return fit;
  auto lsq = [](const std::vector<double>& x, const std::vector<double>& y, double& a, double& b) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    a = (sy - b * sx) / n;
    double rss = 0;
    for (int i = 0; i < n; ++i) {
      double r = y[i] - (a + b * x[i]);
      rss += r * r;
    }
    return rss;
  };
  double a1, b1, a2, b2;
  fit.rss_exp = lsq(xs, ys, a1, b1);
  fit.rss_pow = lsq(xp, ys, a2, b2);
  fit.C = std::exp(a1);
  fit.Gamma = -b1;
  double mean = 0;
  for (double y : ys) mean += y;
  mean /= ys.size();
  double sstot = 0;
  for (double y : ys) sstot += (y - mean) * (y - mean);
  fit.r2 = (sstot > 0) ? 1.0 - fit.rss_exp / sstot : 1.0;
  return fit;
}

double fixed_order_slope(const std::vector<std::pair<double, double>>& eps_err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(eps_err.size());
  for (const auto& [e, err] : eps_err) {
    double x = std::log(e), y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

EpsSweepResult sweep_epsilon(const Scenario& sc, int threads) {
  EpsSweepResult res;
  res.scenario_id = sc.cfg.id;
  std::vector<int> N_list;
  for (int N = 0; N <= sc.cfg.N_max; ++N) N_list.push_back(N);

  std::vector<double> eps_sorted = sc.cfg.eps_list;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());

  res.curves.resize(eps_sorted.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < eps_sorted.size(); ++i)
      res.curves[i] = sweep_orders(sc, eps_sorted[i], N_list);
  } else {
    std::vector<std::future<OrderCurve>> futs;
    for (std::size_t i = 0; i < eps_sorted.size(); ++i)
      futs.push_back(std::async(std::launch::async, [&sc, &N_list, &eps_sorted, i] {
        return sweep_orders(sc, eps_sorted[i], N_list);
      }));
    for (std::size_t i = 0; i < futs.size(); ++i) res.curves[i] = futs[i].get();
  }

  std::vector<std::pair<double, double>> pts;
  std::vector<double> floors;
  for (const auto& c : res.curves) {
    pts.emplace_back(c.eps, c.min_error);
    floors.push_back(c.floor);
    res.g_posterior.push_back(c.eps * std::sqrt(std::max(1, c.argmin_N)));
  }
  res.fit = fit_exponential(pts, floors);
  return res;
}

LocalizationResult localization_sweep(const Scenario& sc, double b,
                                      const std::vector<double>& eps_list, double t) {
  LocalizationResult out;
  out.b = b;
  out.t = t;
  const double absA = std::abs(sc.traj.at(t).A(0, 0));
  for (double eps : eps_list) {
    XGrid grid = make_xgrid(sc, eps, sc.cfg.J);
    Ansatz an(*sc.engine, *sc.cutoff, eps, 0);
    double m = an.localization_mass(t, b, grid);
    double oracle = std::sqrt(std::erfc(b / (eps * absA)));
    if (m > 1e-14) out.rows.push_back({eps, m, oracle});
  }
  auto slope_of = [&](bool oracle) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : out.rows) {
      double x = 1.0 / (r.eps * r.eps), y = std::log(oracle ? r.oracle : r.mass);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const int n = static_cast<int>(out.rows.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  if (out.rows.size() >= 2) {
    out.slope = slope_of(false);
    out.oracle_slope = slope_of(true);
  }
  return out;
}

void write_sweep_csv(const EpsSweepResult& r, const std::string& path) {
  std::ofstream out(path);
  out << "scenario,eps,N,error,bound,floor,runtime_s\n";
  char buf[256];
  for (const auto& c : r.curves)
    for (const auto& row : c.rows) {
      std::snprintf(buf, sizeof buf, "%s,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n",
                    r.scenario_id.c_str(), row.eps, row.N, row.error, row.bound, row.floor,
                    row.runtime_s);
      out << buf;
    }
}

void write_sweep_json(const EpsSweepResult& r, const std::string& path) {
  nlohmann::json j;
  j["scenario"] = r.scenario_id;
  j["fit"] = {{"C", r.fit.C},       {"Gamma", r.fit.Gamma},   {"r2", r.fit.r2},
              {"rss_exp", r.fit.rss_exp}, {"rss_pow", r.fit.rss_pow},
              {"n_points", r.fit.n_points}};
  j["g_posterior"] = r.g_posterior;
  for (const auto& c : r.curves) {
    nlohmann::json jc;
    jc["eps"] = c.eps;
    jc["argmin_N"] = c.argmin_N;
    jc["min_error"] = c.min_error;
    jc["floor"] = c.floor;
    jc["interior_minimum"] = c.has_interior_minimum();
    for (const auto& row : c.rows)
      jc["rows"].push_back({{"N", row.N}, {"error", row.error}, {"bound", row.bound}});
    j["curves"].push_back(jc);
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace hagprop
