#include "snake/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace snake {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string field(double v) { return std::isnan(v) ? std::string() : g9(v); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }
  return out;
}

double parse_field(const std::string& s, const std::string& context) {
  if (s.empty()) return kNaN;
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(context + ": cannot parse number '" + s + "'");
  }
  if (pos != s.size())
    throw std::invalid_argument(context + ": cannot parse number '" + s + "'");
  return v;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::string& header) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("'" + path + "' is empty");
  if (split_csv_line(line) != split_csv_line(header))
    throw std::invalid_argument("'" + path + "' header must be '" + header +
                                "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double require_number(const json& j, const std::string& key,
                      const std::string& context) {
  if (!j.contains(key))
    throw std::invalid_argument(context + "." + key + " is required");
  if (!j[key].is_number())
    throw std::invalid_argument(context + "." + key + " must be a number");
  return j[key].get<double>();
}

}  // namespace

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    if (!out.good()) throw std::runtime_error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ostringstream out;
  out << "t,x,y,theta,phi1,phi2,xdot,ydot,thetadot,phi1dot,phi2dot,"
         "lambda1,lambda2,lambda3,tau1,tau2,"
         "vpar0,vpar1,vpar2,vperp0,vperp1,vperp2\n";
  for (long i = 0; i < traj.rows(); ++i) {
    out << g9(traj.t[i]);
    for (int c = 0; c < 5; ++c) out << ',' << g9(traj.q(i, c));
    for (int c = 0; c < 5; ++c) out << ',' << g9(traj.qd(i, c));
    for (int c = 0; c < 3; ++c) out << ',' << field(traj.lambda(i, c));
    for (int c = 0; c < 2; ++c) out << ',' << field(traj.tau(i, c));
    for (int c = 0; c < 3; ++c) out << ',' << g9(traj.v_par(i, c));
    for (int c = 0; c < 3; ++c) out << ',' << g9(traj.v_perp(i, c));
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_metrics_csv(const std::string& path, const std::string& run_id,
                       const std::vector<CycleMetrics>& rows) {
  std::ostringstream out;
  out << "run,cycle,t0_s,d_mm,vbar_mm_s,dtheta_deg,theta_slope_deg_s,"
         "alpha1_deg,sigma0,sigma1,sigma2\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CycleMetrics& m = rows[i];
    out << run_id << ',' << i << ',' << g9(m.t0) << ',' << g9(m.d * 1e3) << ','
        << g9(m.v_bar * 1e3) << ',' << g9(rad2deg(m.dtheta)) << ','
        << g9(rad2deg(m.theta_slope)) << ',' << g9(rad2deg(m.alpha1)) << ','
        << g9(m.sigma[0]) << ',' << g9(m.sigma[1]) << ',' << g9(m.sigma[2])
        << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_sweep_csv(const std::string& path, const SweepResult& result,
                     const GaitSpec& gait) {
  std::ostringstream out;
  out << "omega,d_mm,vbar_mm_s,alpha1_deg,alpha_ratio,sigma0,sigma1,sigma2,"
         "cycles,converged\n";
  for (const SweepRow& r : result.rows) {
    const double ratio =
        gait.alpha2 > 0 ? r.metrics.alpha1 / gait.alpha2 : kNaN;
    out << g9(r.omega) << ',';
    if (r.failed) {
      out << ",,,,,,," << r.cycles << ",0\n";
      continue;
    }
    out << g9(r.metrics.d * 1e3) << ',' << g9(r.metrics.v_bar * 1e3) << ','
        << g9(rad2deg(r.metrics.alpha1)) << ',' << field(ratio) << ','
        << g9(r.metrics.sigma[0]) << ',' << g9(r.metrics.sigma[1]) << ','
        << g9(r.metrics.sigma[2]) << ',' << r.cycles << ','
        << (r.converged ? 1 : 0) << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "omega,d_mm,vbar_mm_s,sigma0,sigma1,sigma2,alpha1_deg\n";
  for (const ExperimentRecord& r : records) {
    out << g9(r.omega) << ',' << g9(r.d * 1e3) << ',' << g9(r.v_bar * 1e3)
        << ',' << g9(r.sigma[0]) << ',' << g9(r.sigma[1]) << ','
        << g9(r.sigma[2]) << ','
        << (std::isnan(r.alpha1) ? std::string() : g9(rad2deg(r.alpha1)))
        << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  const auto rows =
      read_csv(path, "omega,d_mm,vbar_mm_s,sigma0,sigma1,sigma2,alpha1_deg");
  std::vector<ExperimentRecord> records;
  long rownum = 1;
  for (const auto& cells : rows) {
    ++rownum;
    const std::string ctx = path + ":" + std::to_string(rownum);
    if (cells.size() != 7)
      throw std::invalid_argument(ctx + ": expected 7 fields");
    ExperimentRecord r;
    r.omega = parse_field(cells[0], ctx);
    r.d = parse_field(cells[1], ctx) * 1e-3;
    r.v_bar = parse_field(cells[2], ctx) * 1e-3;
    for (int k = 0; k < 3; ++k) r.sigma[k] = parse_field(cells[3 + k], ctx);
    const double a_deg = parse_field(cells[6], ctx);
    r.alpha1 = std::isnan(a_deg) ? kNaN : deg2rad(a_deg);
    records.push_back(r);
  }
  if (records.empty())
    throw std::invalid_argument("'" + path + "' contains no records");
  return records;
}

void write_trace_csv(const std::string& csv_path, const std::string& meta_path,
                     const MeasuredTrace& trace) {
  std::ostringstream out;
  out << "t,x,y,theta,phi1,phi2\n";
  for (long i = 0; i < trace.rows(); ++i) {
    out << g9(trace.t[i]);
    for (int c = 0; c < 5; ++c) out << ',' << g9(trace.q(i, c));
    out << '\n';
  }
  write_file_atomic(csv_path, out.str());
  json meta;
  meta["gait"] = gait_to_json(trace.commanded);
  write_file_atomic(meta_path, meta.dump(2) + "\n");
}

MeasuredTrace read_trace_csv(const std::string& csv_path,
                             const std::string& meta_path) {
  const auto rows = read_csv(csv_path, "t,x,y,theta,phi1,phi2");
  MeasuredTrace trace;
  trace.t.resize(rows.size());
  trace.q.resize(rows.size(), 5);
  long i = 0;
  for (const auto& cells : rows) {
    const std::string ctx = csv_path + ":" + std::to_string(i + 2);
    if (cells.size() != 6)
      throw std::invalid_argument(ctx + ": expected 6 fields");
    trace.t[i] = parse_field(cells[0], ctx);
    for (int c = 0; c < 5; ++c) trace.q(i, c) = parse_field(cells[1 + c], ctx);
    ++i;
  }
  std::ifstream meta_in(meta_path);
  if (!meta_in)
    throw std::invalid_argument("cannot open trace metadata '" + meta_path +
                                "'");
  json meta;
  try {
    meta_in >> meta;
  } catch (const std::exception& e) {
    throw std::invalid_argument("invalid JSON in '" + meta_path +
                                "': " + e.what());
  }
  if (!meta.contains("gait"))
    throw std::invalid_argument("'" + meta_path + "' needs a gait object");
  trace.commanded = gait_from_json(meta["gait"], "gait");
  trace.validate();
  return trace;
}

json gait_to_json(const GaitSpec& g) {
  json j;
  j["mode"] =
      g.mode == Actuation::Kinematic ? "kinematic" : "semi_passive";
  j["gamma1_deg"] = rad2deg(g.gamma1);
  j["gamma2_deg"] = rad2deg(g.gamma2);
  j["alpha1_deg"] = rad2deg(g.alpha1);
  j["alpha2_deg"] = rad2deg(g.alpha2);
  j["omega_rad_s"] = g.omega;
  j["phase1_deg"] = rad2deg(g.phase1);
  j["phase2_deg"] = rad2deg(g.phase2);
  return j;
}

GaitSpec gait_from_json(const json& j, const std::string& context) {
  GaitSpec g;
  if (j.contains("mode")) {
    const std::string m = j["mode"].get<std::string>();
    if (m == "kinematic")
      g.mode = Actuation::Kinematic;
    else if (m == "semi_passive")
      g.mode = Actuation::SemiPassive;
    else
      throw std::invalid_argument(
          context + ".mode must be 'kinematic' or 'semi_passive'");
  }
  g.gamma1 = deg2rad(require_number(j, "gamma1_deg", context));
  g.gamma2 = deg2rad(require_number(j, "gamma2_deg", context));
  g.alpha1 = deg2rad(require_number(j, "alpha1_deg", context));
  g.alpha2 = deg2rad(require_number(j, "alpha2_deg", context));
  g.omega = require_number(j, "omega_rad_s", context);
  if (j.contains("phase1_deg"))
    g.phase1 = deg2rad(require_number(j, "phase1_deg", context));
  if (j.contains("phase2_deg"))
    g.phase2 = deg2rad(require_number(j, "phase2_deg", context));
  g.validate();
  return g;
}

json params_to_json(const RobotParams& p) {
  json j;
  j["m0_kg"] = p.m0;
  j["m1_kg"] = p.m1;
  j["m2_kg"] = p.m2;
  j["I0_kg_m2"] = p.I0;
  j["I1_kg_m2"] = p.I1;
  j["I2_kg_m2"] = p.I2;
  j["h_m"] = p.h;
  j["l_m"] = p.l;
  j["b_m"] = p.b;
  j["cR0_N_s_per_m"] = p.cR0;
  j["cR1_N_s_per_m"] = p.cR1;
  j["cR2_N_s_per_m"] = p.cR2;
  j["cS0_N_s_per_m"] = p.cS0;
  j["cS1_N_s_per_m"] = p.cS1;
  j["cS2_N_s_per_m"] = p.cS2;
  j["k_tau_Nm_per_rad"] = p.k_tau;
  j["c_tau_Nm_s_per_rad"] = p.c_tau;
  j["gamma1_deg"] = rad2deg(p.gamma1);
  return j;
}

bool apply_params_json(RobotParams& p, const json& j,
                       const std::string& context) {
  if (!j.is_object())
    throw std::invalid_argument(context + " must be a JSON object");
  bool gamma1_set = false;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number())
      throw std::invalid_argument(context + "." + key + " must be a number");
    const double v = value.get<double>();
    if (key == "m0_kg") p.m0 = v;
    else if (key == "m1_kg") p.m1 = v;
    else if (key == "m2_kg") p.m2 = v;
    else if (key == "I0_kg_m2") p.I0 = v;
    else if (key == "I1_kg_m2") p.I1 = v;
    else if (key == "I2_kg_m2") p.I2 = v;
    else if (key == "h_m") p.h = v;
    else if (key == "l_m") p.l = v;
    else if (key == "b_m") p.b = v;
    else if (key == "cR0_N_s_per_m") p.cR0 = v;
    else if (key == "cR1_N_s_per_m") p.cR1 = v;
    else if (key == "cR2_N_s_per_m") p.cR2 = v;
    else if (key == "cS0_N_s_per_m") p.cS0 = v;
    else if (key == "cS1_N_s_per_m") p.cS1 = v;
    else if (key == "cS2_N_s_per_m") p.cS2 = v;
    else if (key == "k_tau_Nm_per_rad") p.k_tau = v;
    else if (key == "c_tau_Nm_s_per_rad") p.c_tau = v;
    else if (key == "gamma1_deg") {
      p.gamma1 = deg2rad(v);
      gamma1_set = true;
    } else {
      throw std::invalid_argument(context + "." + key +
                                  " is not a robot parameter");
    }
  }
  return gamma1_set;
}

json fit_report_json(const FitProblem& prob, const FitResult& result) {
  json j;
  j["objective"] = result.J;
  j["evaluations"] = result.evaluations;
  j["budget_exhausted"] = result.budget_exhausted;
  j["j_history"] = result.j_history;
  json params = json::array();
  for (std::size_t i = 0; i < prob.free.size(); ++i) {
    params.push_back({{"name", to_string(prob.free[i])},
                      {"value", result.params[i]},
                      {"lower", prob.lower[i]},
                      {"upper", prob.upper[i]}});
  }
  j["free_parameters"] = params;
  j["weights"] = {{"d", prob.weights.d},
                  {"v", prob.weights.v},
                  {"sigma", prob.weights.sigma},
                  {"alpha", prob.weights.alpha}};
  json records = json::array();
  for (const RecordResidual& r : result.residuals) {
    records.push_back({{"omega", r.omega},
                       {"e_d", r.e_d},
                       {"e_v", r.e_v},
                       {"e_sigma", {r.e_sigma[0], r.e_sigma[1], r.e_sigma[2]}},
                       {"e_alpha", r.e_alpha},
                       {"J", r.J},
                       {"failed", r.failed},
                       {"converged", r.converged}});
  }
  j["records"] = records;
  return j;
}

}  // namespace snake
