#pragma once

#include "hagprop/reference_solver.hpp"
#include "hagprop/scenario.hpp"

namespace hagprop {

// N(eps) = floor(g^2/eps^2), guarded against floating-point ties.
int optimal_N(double eps, double g);

struct SweepRow {
  double eps;
  int N;
  double error;
  double bound;       // accumulated Duhamel integral / eps^2
  double floor;       // solver self-convergence estimate
  double runtime_s;
};

struct OrderCurve {
  double eps;
  std::vector<SweepRow> rows;  // one per N
  int argmin_N = -1;
  double min_error = 0;
  double floor = 0;
  bool has_interior_minimum() const;
};

// error-vs-N curve at one eps: a single exact propagation per N (the initial
// state depends on N), solver floor estimated once from step-halving
OrderCurve sweep_orders(const Scenario& sc, double eps, const std::vector<int>& N_list);

struct ExpFit {
  double C = 0, Gamma = 0, r2 = 0;
  double rss_exp = 0;   // residual sum of squares of log err vs 1/eps^2
  double rss_pow = 0;   // same data against log err vs log eps
  int n_points = 0;
};

// least squares of log(err) = log C - Gamma / eps^2 over rows with
// err > 10 x floor; also fits the power-law alternative for comparison
ExpFit fit_exponential(const std::vector<std::pair<double, double>>& eps_err,
                       const std::vector<double>& floors);

struct EpsSweepResult {
  std::string scenario_id;
  std::vector<OrderCurve> curves;  // one per eps
  ExpFit fit;
  std::vector<double> g_posterior;  // eps * sqrt(N*(eps)) per eps
};

EpsSweepResult sweep_epsilon(const Scenario& sc, int threads = 1);

// fitted slope of log(error) vs log(eps) at fixed N
double fixed_order_slope(const std::vector<std::pair<double, double>>& eps_err);

struct LocalizationRow {
  double eps;
  double mass;
  double oracle;  // sqrt(erfc(b / (eps |A(t)|)))
};

struct LocalizationResult {
  double b;
  double t;
  std::vector<LocalizationRow> rows;
  double slope;         // of log mass vs 1/eps^2 (expected negative)
  double oracle_slope;
};

// order-0 Gaussian mass outside |X - a(t)| > b against the analytic tail
LocalizationResult localization_sweep(const Scenario& sc, double b,
                                      const std::vector<double>& eps_list, double t);

void write_sweep_csv(const EpsSweepResult& r, const std::string& path);
void write_sweep_json(const EpsSweepResult& r, const std::string& path);

}  // namespace hagprop
