#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hagprop/ansatz.hpp"
#include "hagprop/electronic_model.hpp"
#include "hagprop/expansion_engine.hpp"
#include "hagprop/grid_state.hpp"

namespace hagprop {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ScenarioConfig {
  std::string id = "scenario";

  std::string model_id = "avoided_crossing";
  double delta = 0.5;
  double omega = 1.6;
  double kappa = 0.0;
  int level = 0;
  double xi_min = -1e30, xi_max = 1e30;
  double gap_threshold = 1e-6;

  double a0 = 1.0, eta0 = 0.0, S0 = 0.0;
  Complex A0{1, 0}, B0{1, 0};
  int J = 0;
  std::vector<Complex> c0 = {Complex(1, 0)};

  int N_max = 6;
  long n_t = 801;
  double h_w = 0.1;
  double w_margin = 2.0;

  double b0 = 0, b1 = 0;  // 0 = derive from eps_max and the trajectory

  double T = 1.0;
  double dt_flow = 1e-3;

  double solver_dt = 0;  // 0 = T / 2^14
  double floor_tol = 1e-9;
  int max_halvings = 6;
  double box_pad = 1.0;
  int duhamel_probes = 33;

  std::vector<double> eps_list = {0.35, 0.3, 0.25, 0.2, 0.15};
  std::vector<int> fixed_N;  // slope-study orders
  double g = 0.5;

  double loc_b = 1.0;
  std::vector<double> loc_eps = {0.3, 0.2, 0.15};

  std::string out_dir = "out";
};

// key = value file with [sections] (sections are cosmetic); JSON accepted
// when the file starts with '{'.  Errors cite the offending line.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin);

// built scenario: model, trajectory, computed expansion, cutoff
struct Scenario {
  ScenarioConfig cfg;
  std::unique_ptr<ElectronicModel> model;
  Trajectory traj;
  std::unique_ptr<ExpansionEngine> engine;
  std::unique_ptr<CutoffF> cutoff;
  double b0 = 0, b1 = 0;
  double normA_max = 0, normB_max = 0, eta_max = 0, a_lo = 0, a_hi = 0;
};

Scenario build_scenario(const ScenarioConfig& cfg);

// solver grid for one eps: power-of-two node count, spacing bounded by the
// packet resolution rule and the momentum content of degree <= max_degree
XGrid make_xgrid(const Scenario& sc, double eps, int max_degree);

// every tolerance and grid parameter consumed at runtime, as JSON
std::string manifest_json(const Scenario& sc);

}  // namespace hagprop
