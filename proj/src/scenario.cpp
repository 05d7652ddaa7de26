#include "hagprop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hagprop {

namespace {

using json = nlohmann::json;

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream iss(s);
  double v;
  while (iss >> v) out.push_back(v);
  return out;
}

ScenarioConfig from_kv(const std::map<std::string, std::pair<std::string, int>>& kv,
                       const std::string& origin) {
  ScenarioConfig c;
  auto fail = [&](const std::string& key, int line, const std::string& why) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": key '" + key + "': " + why);
  };
  for (const auto& [key, vl] : kv) {
    const std::string& val = vl.first;
    const int line = vl.second;
    try {
      if (key == "id") c.id = val;
      else if (key == "model") c.model_id = val;
      else if (key == "delta") c.delta = std::stod(val);
      else if (key == "omega") c.omega = std::stod(val);
      else if (key == "kappa") c.kappa = std::stod(val);
      else if (key == "level") c.level = std::stoi(val);
      else if (key == "xi_min") c.xi_min = std::stod(val);
      else if (key == "xi_max") c.xi_max = std::stod(val);
      else if (key == "gap_threshold") c.gap_threshold = std::stod(val);
      else if (key == "a0") c.a0 = std::stod(val);
      else if (key == "eta0") c.eta0 = std::stod(val);
      else if (key == "S0") c.S0 = std::stod(val);
      else if (key == "A0_re") c.A0.real(std::stod(val));
      else if (key == "A0_im") c.A0.imag(std::stod(val));
      else if (key == "B0_re") c.B0.real(std::stod(val));
      else if (key == "B0_im") c.B0.imag(std::stod(val));
      else if (key == "J") c.J = std::stoi(val);
      else if (key == "c0") {
        c.c0.clear();
        for (double v : parse_double_list(val)) c.c0.emplace_back(v, 0.0);
      } else if (key == "N_max") c.N_max = std::stoi(val);
      else if (key == "n_t") c.n_t = std::stol(val);
      else if (key == "h_w") c.h_w = std::stod(val);
      else if (key == "w_margin") c.w_margin = std::stod(val);
      else if (key == "b0") c.b0 = std::stod(val);
      else if (key == "b1") c.b1 = std::stod(val);
      else if (key == "T") c.T = std::stod(val);
      else if (key == "dt_flow") c.dt_flow = std::stod(val);
      else if (key == "solver_dt") c.solver_dt = std::stod(val);
      else if (key == "floor_tol") c.floor_tol = std::stod(val);
      else if (key == "max_halvings") c.max_halvings = std::stoi(val);
      else if (key == "box_pad") c.box_pad = std::stod(val);
      else if (key == "duhamel_probes") c.duhamel_probes = std::stoi(val);
      else if (key == "eps") c.eps_list = parse_double_list(val);
      else if (key == "fixed_N") {
        c.fixed_N.clear();
        for (double v : parse_double_list(val)) c.fixed_N.push_back(static_cast<int>(v));
      } else if (key == "g") c.g = std::stod(val);
      else if (key == "loc_b") c.loc_b = std::stod(val);
      else if (key == "loc_eps") c.loc_eps = parse_double_list(val);
      else if (key == "out_dir") c.out_dir = val;
      else fail(key, line, "unknown key");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(key, line, std::string("cannot parse value '") + val + "': " + e.what());
    }
  }
  return c;
}

ScenarioConfig from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": JSON parse failure: " + e.what());
  }
  std::map<std::string, std::pair<std::string, int>> kv;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string v;
    if (it->is_string()) v = it->get<std::string>();
    else if (it->is_array()) {
      std::ostringstream oss;
      for (const auto& x : *it) oss << x.get<double>() << " ";
      v = oss.str();
    } else {
      std::ostringstream oss;
      oss.precision(17);
      oss << it->get<double>();
      v = oss.str();
    }
    kv[it.key()] = {v, 0};
  }
  return from_kv(kv, origin);
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
  std::string trimmed = text;
  auto first = trimmed.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && trimmed[first] == '{') return from_json(text, origin);

  std::map<std::string, std::pair<std::string, int>> kv;
  std::istringstream iss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto notspace = line.find_first_not_of(" \t\r");
    if (notspace == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(notspace, last - notspace + 1);
    if (line.front() == '[') continue;  // section headers are cosmetic
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(val);
    if (kv.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = {val, lineno};
  }
  return from_kv(kv, origin);
}

ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(ENOENT, std::generic_category(), "config file: " + path);
  std::ostringstream oss;
  oss << in.rdbuf();
  return parse_config_text(oss.str(), path);
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.cfg = cfg;

  if (cfg.T <= 0) throw ConfigError("T must be positive");
  if (cfg.eps_list.empty()) throw ConfigError("eps list must not be empty");
  for (double e : cfg.eps_list)
    if (e <= 0 || e >= 1) throw ConfigError("eps values must lie in (0, 1)");

  sc.model = make_model(cfg.model_id, cfg.delta, cfg.omega, cfg.kappa, cfg.level);
  sc.model->xi_min = cfg.xi_min;
  sc.model->xi_max = cfg.xi_max;
  sc.model->gap_threshold = cfg.gap_threshold;
  sc.model->set_max_taylor_order(std::max(12, cfg.N_max + 3));

  // initial wavepacket parameters must satisfy the compatibility conditions
  WavepacketParams p0;
  p0.A = Matrix::Constant(1, 1, cfg.A0);
  p0.B = Matrix::Constant(1, 1, cfg.B0);
  p0.a = RealVector::Constant(1, cfg.a0);
  p0.eta = RealVector::Constant(1, cfg.eta0);
  p0.S = cfg.S0;
  p0.hbar = 1.0;
  auto [d1, d2] = validate(p0);
  if (d1 > 1e-10 || d2 > 1e-10)
    throw ConfigError("A0, B0 violate the compatibility conditions A^tB-B^tA=0, A*B+B*A=2I "
                      "(defects " + std::to_string(d1) + ", " + std::to_string(d2) + ")");

  double nrm = 0;
  for (const auto& cj : cfg.c0) nrm += std::norm(cj);
  if (cfg.c0.size() != static_cast<std::size_t>(cfg.J + 1))
    throw ConfigError("c0 must list J+1 coefficients");
  if (std::abs(nrm - 1.0) > 1e-10)
    throw ConfigError("initial coefficients must satisfy sum |c0_j|^2 = 1");

  Potential pot = potential_of(*sc.model);
  sc.traj = propagate(FlowState{0.0, p0}, cfg.T, cfg.dt_flow, pot);

  for (const auto& s : sc.traj.samples()) {
    sc.normA_max = std::max(sc.normA_max, std::abs(s.params.A(0, 0)));
    sc.normB_max = std::max(sc.normB_max, std::abs(s.params.B(0, 0)));
    sc.eta_max = std::max(sc.eta_max, std::abs(s.params.eta(0)));
  }
  sc.a_lo = 1e300;
  sc.a_hi = -1e300;
  for (const auto& s : sc.traj.samples()) {
    sc.a_lo = std::min(sc.a_lo, s.params.a(0));
    sc.a_hi = std::max(sc.a_hi, s.params.a(0));
  }

  double eps_max = *std::max_element(cfg.eps_list.begin(), cfg.eps_list.end());
  sc.b0 = (cfg.b0 > 0) ? cfg.b0 : 8.0 * std::sqrt(eps_max) * sc.normA_max;
  sc.b1 = (cfg.b1 > 0) ? cfg.b1 : 1.5 * sc.b0;
  if (sc.b0 >= sc.b1) throw ConfigError("cutoff radii must satisfy b0 < b1");

  const double W = sc.b1 + cfg.w_margin;
  if (sc.a_lo - W <= cfg.xi_min || sc.a_hi + W >= cfg.xi_max)
    throw ConfigError("cutoff radius b1 plus margin must stay strictly inside the validity "
                      "region along the whole trajectory");

  EngineSettings es;
  es.J = cfg.J;
  es.c0 = cfg.c0;
  es.N = cfg.N_max;
  es.b1 = sc.b1;
  es.wgrid = WGrid(W, cfg.h_w);
  es.tgrid = TimeGrid(cfg.T, cfg.n_t);
  sc.engine = std::make_unique<ExpansionEngine>(*sc.model, sc.traj, es);
  sc.engine->compute();

  sc.cutoff = std::make_unique<CutoffF>(sc.b0, sc.b1);
  return sc;
}

XGrid make_xgrid(const Scenario& sc, double eps, int max_degree) {
  const double pad = sc.cfg.box_pad + std::sqrt(eps) * sc.normA_max;
  const double lo = sc.a_lo - sc.b1 - pad;
  const double hi = sc.a_hi + sc.b1 + pad;
  const double dx1 = eps / (4.0 * sc.normB_max);
  const double k_need =
      (sc.eta_max + 1.5 * eps * sc.normB_max * std::sqrt(2.0 * max_degree + 1.0)) / (eps * eps);
  const double dx2 = 0.9 * 3.14159265358979323846 / k_need;
  const double dx = std::min(dx1, dx2);
  long n = 1;
  while (n * dx < hi - lo) n *= 2;
  XGrid g;
  g.n = n;
  g.dx = dx;
  g.x_min = 0.5 * (lo + hi) - 0.5 * n * dx;
  return g;
}

std::string manifest_json(const Scenario& sc) {
  json j;
  const auto& c = sc.cfg;
  j["id"] = c.id;
  j["model"] = {{"id", c.model_id}, {"delta", c.delta}, {"omega", c.omega},
                {"kappa", c.kappa}, {"level", c.level},  {"xi_min", c.xi_min},
                {"xi_max", c.xi_max}, {"gap_threshold", c.gap_threshold}};
  j["initial"] = {{"a0", c.a0},     {"eta0", c.eta0},          {"S0", c.S0},
                  {"A0_re", c.A0.real()}, {"A0_im", c.A0.imag()}, {"B0_re", c.B0.real()},
                  {"B0_im", c.B0.imag()}, {"J", c.J}};
  j["expansion"] = {{"N_max", c.N_max}, {"n_t", c.n_t}, {"h_w", c.h_w},
                    {"w_margin", c.w_margin}};
  j["cutoff"] = {{"b0", sc.b0}, {"b1", sc.b1}};
  j["time"] = {{"T", c.T}, {"dt_flow", c.dt_flow}};
  j["solver"] = {{"dt", c.solver_dt},        {"floor_tol", c.floor_tol},
                 {"max_halvings", c.max_halvings}, {"box_pad", c.box_pad},
                 {"duhamel_probes", c.duhamel_probes}};
  j["sweep"] = {{"eps", c.eps_list}, {"fixed_N", c.fixed_N}, {"g", c.g}};
  j["localization"] = {{"b", c.loc_b}, {"eps", c.loc_eps}};
  j["tolerances"] = {{"cond1", 1e-10},       {"cond1_flow", 1e-8},
                     {"invariant_abort", 1e-6}, {"orthogonality", 1e-9},
                     {"phase_condition", 1e-8}, {"residual_fields", 1e-7},
                     {"gram", 1e-8}};
  j["trajectory"] = {{"normA_max", sc.normA_max}, {"normB_max", sc.normB_max},
                     {"eta_max", sc.eta_max},     {"a_lo", sc.a_lo},
                     {"a_hi", sc.a_hi},           {"cond1_defect", sc.traj.max_cond1_defect()}};
  j["spectral"] = {{"min_gap", sc.engine->spectral_field().min_gap()}};
  return j.dump(2);
}

}  // namespace hagprop
