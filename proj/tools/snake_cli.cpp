#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snake/calib.hpp"
#include "snake/io.hpp"
#include "snake/sweep.hpp"

namespace {

using namespace snake;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("invalid JSON in '" + path + "': " + e.what());
  }
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> ok,
                         const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* k : ok) known = known || key == k;
    if (!known)
      throw std::invalid_argument(context + "." + key + " is not recognized");
  }
}

std::string require_string(const json& j, const std::string& key,
                           const std::string& context) {
  if (!j.contains(key))
    throw std::invalid_argument(context + "." + key + " is required");
  if (!j[key].is_string())
    throw std::invalid_argument(context + "." + key + " must be a string");
  return j[key].get<std::string>();
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw std::invalid_argument(context + "." + key + " must be a number");
  return j[key].get<double>();
}

ModelConfig parse_model(const json& j) {
  if (!j.is_object())
    throw std::invalid_argument("model must be a JSON object");
  reject_unknown_keys(j, {"actuation", "wheels", "roll_dissipation"}, "model");
  ModelConfig cfg;
  const std::string act = require_string(j, "actuation", "model");
  if (act == "kinematic")
    cfg.actuation = Actuation::Kinematic;
  else if (act == "semi_passive")
    cfg.actuation = Actuation::SemiPassive;
  else
    throw std::invalid_argument(
        "model.actuation must be 'kinematic' or 'semi_passive'");
  const std::string wh = require_string(j, "wheels", "model");
  if (wh == "no_skid")
    cfg.wheels = Wheels::NoSkid;
  else if (wh == "viscous_skid")
    cfg.wheels = Wheels::ViscousSkid;
  else
    throw std::invalid_argument(
        "model.wheels must be 'no_skid' or 'viscous_skid'");
  if (j.contains("roll_dissipation")) {
    if (!j["roll_dissipation"].is_boolean())
      throw std::invalid_argument("model.roll_dissipation must be a boolean");
    cfg.roll_dissipation = j["roll_dissipation"].get<bool>();
  }
  return cfg;
}

GaitSpec parse_gait(const json& j, const ModelConfig& model) {
  if (!j.is_object())
    throw std::invalid_argument("gait must be a JSON object");
  const bool sp = model.actuation == Actuation::SemiPassive;
  if (j.contains("preset")) {
    reject_unknown_keys(j,
                        {"preset", "omega_rad_s", "gamma1_deg", "gamma2_deg",
                         "alpha1_deg", "alpha2_deg", "phase1_deg",
                         "phase2_deg"},
                        "gait");
    const std::string name = require_string(j, "preset", "gait");
    GaitPreset preset;
    if (name == "asymmetric")
      preset = sp ? GaitPreset::AsymmetricSemiPassive
                  : GaitPreset::AsymmetricKinematic;
    else if (name == "symmetric")
      preset = sp ? GaitPreset::SymmetricSemiPassive
                  : GaitPreset::SymmetricKinematic;
    else
      throw std::invalid_argument(
          "gait.preset must be 'asymmetric' or 'symmetric'");
    if (!j.contains("omega_rad_s"))
      throw std::invalid_argument("gait.omega_rad_s is required");
    GaitSpec g = make_gait(preset, number_or(j, "omega_rad_s", 0, "gait"));
    g.gamma1 = deg2rad(number_or(j, "gamma1_deg", rad2deg(g.gamma1), "gait"));
    g.gamma2 = deg2rad(number_or(j, "gamma2_deg", rad2deg(g.gamma2), "gait"));
    g.alpha1 = deg2rad(number_or(j, "alpha1_deg", rad2deg(g.alpha1), "gait"));
    g.alpha2 = deg2rad(number_or(j, "alpha2_deg", rad2deg(g.alpha2), "gait"));
    g.phase1 = deg2rad(number_or(j, "phase1_deg", rad2deg(g.phase1), "gait"));
    g.phase2 = deg2rad(number_or(j, "phase2_deg", rad2deg(g.phase2), "gait"));
    g.validate();
    return g;
  }
  reject_unknown_keys(j,
                      {"mode", "omega_rad_s", "gamma1_deg", "gamma2_deg",
                       "alpha1_deg", "alpha2_deg", "phase1_deg", "phase2_deg"},
                      "gait");
  json jj = j;
  if (!jj.contains("mode")) jj["mode"] = sp ? "semi_passive" : "kinematic";
  GaitSpec g = gait_from_json(jj, "gait");
  if (g.mode != model.actuation)
    throw std::invalid_argument("gait.mode conflicts with model.actuation");
  return g;
}

ParamVariant parse_variant(const std::string& s) {
  if (s == "simulation") return ParamVariant::Simulation;
  if (s == "fitted_asymmetric" || s == "fitted-asymmetric")
    return ParamVariant::FittedAsymmetric;
  if (s == "fitted_symmetric" || s == "fitted-symmetric")
    return ParamVariant::FittedSymmetric;
  throw std::invalid_argument(
      "variant must be 'simulation', 'fitted_asymmetric' or "
      "'fitted_symmetric', got '" +
      s + "'");
}

RobotParams preset_params(const std::string& preset, ParamVariant variant) {
  if (preset == "table1") return table1_params(variant);
  if (preset == "table2") return table2_params(variant);
  throw std::invalid_argument("params.preset must be 'table1' or 'table2'");
}

/// Base set comes from the named table (default: table1 for kinematic
/// builds, table2 for semi-passive); explicit fields override it. The
/// spring's free angle follows the gait offset unless set explicitly.
RobotParams parse_params(const json* j, const ModelConfig& model,
                         const GaitSpec& gait) {
  const bool sp = model.actuation == Actuation::SemiPassive;
  std::string preset = sp ? "table2" : "table1";
  ParamVariant variant = ParamVariant::Simulation;
  json overrides = json::object();
  if (j) {
    if (!j->is_object())
      throw std::invalid_argument("params must be a JSON object");
    overrides = *j;
    if (overrides.contains("preset")) {
      preset = require_string(overrides, "preset", "params");
      overrides.erase("preset");
    }
    if (overrides.contains("variant")) {
      variant = parse_variant(require_string(overrides, "variant", "params"));
      overrides.erase("variant");
    }
  }
  RobotParams p = preset_params(preset, variant);
  const bool gamma1_set = apply_params_json(p, overrides, "params");
  if (!gamma1_set && sp) p.gamma1 = gait.gamma1;
  p.validate();
  return p;
}

struct RunSetup {
  ModelConfig model;
  GaitSpec gait;
  RobotParams params;
  SolverOpts solver;
  double cycles = 10;
  double t_end = 0;  // [s]; 0 derives the span from cycles
  int samples_per_cycle = 256;
  double steady_tol = 1e-3;
  int max_cycles = 50;
};

RunSetup load_setup(const std::string& path) {
  const json j = load_json(path);
  if (!j.is_object())
    throw std::invalid_argument("'" + path + "' must hold a JSON object");
  reject_unknown_keys(j, {"model", "gait", "params", "solver", "run", "steady"},
                      "config");
  if (!j.contains("model"))
    throw std::invalid_argument("config.model is required");
  if (!j.contains("gait"))
    throw std::invalid_argument("config.gait is required");

  RunSetup s;
  s.model = parse_model(j["model"]);
  s.gait = parse_gait(j["gait"], s.model);
  const json* pj = j.contains("params") ? &j["params"] : nullptr;
  s.params = parse_params(pj, s.model, s.gait);

  if (j.contains("solver")) {
    const json& sj = j["solver"];
    reject_unknown_keys(
        sj, {"rtol", "atol", "max_step_s", "singularity_eps", "cond_bound"},
        "solver");
    s.solver.rtol = number_or(sj, "rtol", s.solver.rtol, "solver");
    s.solver.atol = number_or(sj, "atol", s.solver.atol, "solver");
    s.solver.max_step = number_or(sj, "max_step_s", s.solver.max_step,
                                  "solver");
    s.solver.singularity_eps = number_or(sj, "singularity_eps",
                                         s.solver.singularity_eps, "solver");
    s.solver.cond_bound = number_or(sj, "cond_bound", s.solver.cond_bound,
                                    "solver");
    s.solver.validate();
  }
  if (j.contains("run")) {
    const json& rj = j["run"];
    reject_unknown_keys(rj, {"cycles", "t_end_s", "samples_per_cycle"}, "run");
    s.cycles = number_or(rj, "cycles", s.cycles, "run");
    s.t_end = number_or(rj, "t_end_s", s.t_end, "run");
    s.samples_per_cycle =
        int(number_or(rj, "samples_per_cycle", s.samples_per_cycle, "run"));
    if (!(s.cycles > 0))
      throw std::invalid_argument("run.cycles must be positive");
    if (s.t_end < 0)
      throw std::invalid_argument("run.t_end_s must be non-negative");
    if (s.samples_per_cycle < 2)
      throw std::invalid_argument("run.samples_per_cycle must be at least 2");
  }
  if (j.contains("steady")) {
    const json& tj = j["steady"];
    reject_unknown_keys(tj, {"tol", "max_cycles"}, "steady");
    s.steady_tol = number_or(tj, "tol", s.steady_tol, "steady");
    s.max_cycles = int(number_or(tj, "max_cycles", s.max_cycles, "steady"));
    if (!(s.steady_tol >= 0))
      throw std::invalid_argument("steady.tol must be non-negative");
    if (s.max_cycles < 2)
      throw std::invalid_argument("steady.max_cycles must be at least 2");
  }
  return s;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string sibling_path(const std::string& path, const std::string& suffix,
                         const std::string& ext) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string() + ext;
}

std::vector<double> parse_number_list(const std::string& s,
                                      const std::string& what) {
  std::vector<double> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty())
      throw std::invalid_argument(what + " has an empty entry in '" + s + "'");
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(cur, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != cur.size())
      throw std::invalid_argument(what + ": cannot parse '" + cur + "'");
    out.push_back(v);
    cur.clear();
  };
  for (char c : s) {
    if (c == ',')
      flush();
    else if (!std::isspace(static_cast<unsigned char>(c)))
      cur += c;
  }
  flush();
  return out;
}

/// Accepts either "start:step:stop" (inclusive) or a comma list.
std::vector<double> parse_omegas(const std::string& s) {
  std::vector<double> omegas;
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts.push_back(cur);
    if (parts.size() != 3)
      throw std::invalid_argument("--omegas range must be start:step:stop");
    const double start = parse_number_list(parts[0], "--omegas")[0];
    const double step = parse_number_list(parts[1], "--omegas")[0];
    const double stop = parse_number_list(parts[2], "--omegas")[0];
    if (!(step > 0) || !(start > 0) || !(stop >= start))
      throw std::invalid_argument(
          "--omegas range needs positive start and step with stop >= start");
    const int n = int(std::floor((stop - start) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) omegas.push_back(start + i * step);
  } else {
    omegas = parse_number_list(s, "--omegas");
  }
  for (double w : omegas)
    if (!(w > 0) || !std::isfinite(w))
      throw std::invalid_argument("--omegas entries must be positive");
  return omegas;
}

FitWeights auto_weights(const ModelConfig& model, const GaitSpec& gait) {
  if (model.actuation == Actuation::SemiPassive)
    return weights_semi_passive_symmetric();
  if (gait.gamma1 == 0 && gait.gamma2 == 0)
    return weights_kinematic_symmetric();
  return weights_kinematic_asymmetric();
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 std::string metrics_out) {
  const RunSetup s = load_setup(config_path);
  const double t_end =
      s.t_end > 0 ? s.t_end : s.cycles * s.gait.period();
  const Trajectory traj = simulate(s.model, s.gait, s.params, t_end, s.solver,
                                   s.samples_per_cycle);
  std::vector<CycleMetrics> rows;
  try {
    rows = all_cycle_metrics(traj, s.gait);
  } catch (const NoCycleFound&) {
  }
  if (metrics_out.empty()) metrics_out = sibling_path(out, "_metrics", ".csv");
  write_trajectory_csv(out, traj);
  write_metrics_csv(metrics_out, stem_of(config_path), rows);
  std::cout << "wrote " << out << " (" << traj.rows() << " samples) and "
            << metrics_out << " (" << rows.size() << " cycles)\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& omegas,
              const std::string& out, unsigned threads) {
  const RunSetup s = load_setup(config_path);
  SweepSpec spec;
  spec.omegas = parse_omegas(omegas);
  spec.cfg = s.model;
  spec.gait = s.gait;
  spec.tol = s.steady_tol;
  spec.max_cycles = s.max_cycles;
  spec.solver = s.solver;
  spec.samples_per_cycle = s.samples_per_cycle;
  spec.max_threads = threads;
  const SweepResult res = frequency_sweep(spec, s.params);
  write_sweep_csv(out, res, s.gait);
  int failed = 0;
  for (const SweepRow& r : res.rows) {
    if (!r.failed) continue;
    ++failed;
    std::cerr << "omega = " << r.omega << ": " << r.error << "\n";
  }
  std::cout << "wrote " << out << " (" << res.rows.size() << " frequencies, "
            << failed << " failed)\n";
  return 0;
}

int cmd_fit(const std::string& config_path, const std::string& records_path,
            const std::string& free_list, const std::string& out,
            const std::string& lower_list, const std::string& upper_list,
            const std::string& guess_list, const std::string& weight_list,
            int max_evals) {
  const RunSetup s = load_setup(config_path);

  FitProblem prob;
  prob.cfg = s.model;
  prob.gait = s.gait;
  prob.base = s.params;
  prob.records = read_records_csv(records_path);
  prob.steady_tol = s.steady_tol;
  prob.max_cycles = s.max_cycles;
  prob.solver = s.solver;
  prob.samples_per_cycle = s.samples_per_cycle;
  prob.max_evals = max_evals;

  std::string cur;
  for (char c : free_list + ",") {
    if (c != ',') {
      cur += c;
      continue;
    }
    if (!cur.empty()) prob.free.push_back(fit_param_from_string(cur));
    cur.clear();
  }

  const VecXd base = prob.initial_guess();
  prob.lower.resize(base.size());
  prob.upper.resize(base.size());
  for (long i = 0; i < base.size(); ++i) {
    if (!(base[i] > 0) && (lower_list.empty() || upper_list.empty()))
      throw std::invalid_argument(
          std::string("explicit --lower/--upper are required: base value of ") +
          to_string(prob.free[i]) + " is zero");
    prob.lower[i] = base[i] / 10;
    prob.upper[i] = base[i] * 10;
  }
  auto fill_bounds = [&](const std::string& list, VecXd& dst,
                         const char* flag) {
    if (list.empty()) return;
    const auto vals = parse_number_list(list, flag);
    if (long(vals.size()) != dst.size())
      throw std::invalid_argument(std::string(flag) +
                                  " must list one value per free parameter");
    for (long i = 0; i < dst.size(); ++i) dst[i] = vals[i];
  };
  fill_bounds(lower_list, prob.lower, "--lower");
  fill_bounds(upper_list, prob.upper, "--upper");

  if (weight_list.empty()) {
    prob.weights = auto_weights(s.model, s.gait);
  } else {
    const auto w = parse_number_list(weight_list, "--weights");
    if (w.size() != 4)
      throw std::invalid_argument("--weights must be d,v,sigma,alpha");
    prob.weights = {w[0], w[1], w[2], w[3]};
  }
  prob.validate();

  VecXd guess = base;
  if (!guess_list.empty()) {
    const auto g = parse_number_list(guess_list, "--guess");
    if (long(g.size()) != base.size())
      throw std::invalid_argument(
          "--guess must list one value per free parameter");
    for (long i = 0; i < guess.size(); ++i) guess[i] = g[i];
  }

  const FitResult result = fit(prob, guess);
  write_file_atomic(out, fit_report_json(prob, result).dump(2) + "\n");
  std::cout << "wrote " << out << " (J = " << g9(result.J) << " after "
            << result.evaluations << " evaluations)\n";
  return 0;
}

int cmd_analyze(const std::string& trace_path, std::string meta_path,
                int window, const std::string& out,
                const std::string& config_path) {
  if (meta_path.empty()) meta_path = sibling_path(trace_path, "", ".json");
  MeasuredTrace trace = read_trace_csv(trace_path, meta_path);
  RobotParams p;
  if (config_path.empty()) {
    p = trace.commanded.mode == Actuation::SemiPassive ? table2_params()
                                                       : table1_params();
  } else {
    p = load_setup(config_path).params;
  }
  if (window > 1) trace = smooth_trace(trace, window);
  const auto rows = trace_metrics(trace, trace.commanded, p);
  write_metrics_csv(out, stem_of(trace_path), rows);
  std::cout << "wrote " << out << " (" << rows.size() << " cycles)\n";
  return 0;
}

int cmd_params(const std::string& preset, const std::string& variant) {
  const RobotParams p = preset_params(preset, parse_variant(variant));
  std::cout << params_to_json(p).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-link wheeled snake vehicle: simulation, sweeps, fitting"};
  app.require_subcommand(1);

  std::string config, out, metrics_out, omegas, records, free_list;
  std::string lower_list, upper_list, guess_list, weight_list;
  std::string trace, meta, preset = "table1", variant = "simulation";
  unsigned threads = 0;
  int max_evals = 200, window = 1;

  auto* sim = app.add_subcommand("simulate", "Integrate one run to CSV");
  sim->add_option("--config", config, "Run configuration JSON")->required();
  sim->add_option("--out", out, "Trajectory CSV path")->required();
  sim->add_option("--metrics", metrics_out,
                  "Per-cycle metrics CSV path (default: <out>_metrics.csv)");

  auto* swp = app.add_subcommand("sweep", "Steady-state frequency sweep");
  swp->add_option("--config", config, "Run configuration JSON")->required();
  swp->add_option("--omegas", omegas, "start:step:stop or comma list [rad/s]")
      ->required();
  swp->add_option("--out", out, "Sweep CSV path")->required();
  swp->add_option("--threads", threads, "Worker threads (0 = hardware)");

  auto* fitc = app.add_subcommand("fit", "Fit dissipation parameters");
  fitc->add_option("--config", config, "Run configuration JSON")->required();
  fitc->add_option("--records", records, "Experiment records CSV")->required();
  fitc->add_option("--free", free_list, "Comma list of free parameters")
      ->required();
  fitc->add_option("--out", out, "Fit report JSON path")->required();
  fitc->add_option("--lower", lower_list, "Lower bounds (default base/10)");
  fitc->add_option("--upper", upper_list, "Upper bounds (default base*10)");
  fitc->add_option("--guess", guess_list, "Initial guess (default base)");
  fitc->add_option("--weights", weight_list,
                   "d,v,sigma,alpha (default chosen from the configuration)");
  fitc->add_option("--max-evals", max_evals, "Objective evaluation budget");

  auto* ana = app.add_subcommand("analyze", "Per-cycle metrics of a trace");
  ana->add_option("--trace", trace, "Measured trace CSV")->required();
  ana->add_option("--meta", meta,
                  "Gait sidecar JSON (default: trace with .json)");
  ana->add_option("--window", window, "Odd smoothing window (1 = off)");
  ana->add_option("--out", out, "Metrics CSV path")->required();
  ana->add_option("--config", config, "Optional config supplying the params");

  auto* par = app.add_subcommand("params", "Print a parameter preset");
  par->add_option("--preset", preset, "table1 or table2");
  par->add_option("--variant", variant,
                  "simulation, fitted_asymmetric or fitted_symmetric");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config, out, metrics_out);
    if (swp->parsed()) return cmd_sweep(config, omegas, out, threads);
    if (fitc->parsed())
      return cmd_fit(config, records, free_list, out, lower_list, upper_list,
                     guess_list, weight_list, max_evals);
    if (ana->parsed()) return cmd_analyze(trace, meta, window, out, config);
    if (par->parsed()) return cmd_params(preset, variant);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
