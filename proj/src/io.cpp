#include "ctop/io.hpp"

#include "ctop/channel.hpp"
#include "ctop/discretization.hpp"
#include "ctop/ocp.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ctop {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kBitsPerMegabyte = 8.0e6;  // SI megabytes
constexpr double kDegToRad = M_PI / 180.0;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* k : known) {
      if (key == k) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorCode::parse_error, "unknown key '" + context + key + "'");
    }
  }
}

double get_number(const json& j, const std::string& context) {
  if (!j.is_number()) throw Error(ErrorCode::parse_error, context + ": expected a number");
  return j.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> get_vector(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorCode::parse_error, context + ": expected an array of " + std::to_string(N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = get_number(j[i], context);
  return v;
}

// Reads j[key] if present, else the default; records the outcome into the
// effective configuration block.
double field(const json& j, const char* key, double def, ordered_json& eff,
             const std::string& context) {
  const double v = j.contains(key) ? get_number(j.at(key), context + key) : def;
  eff[key] = v;
  return v;
}

int int_field(const json& j, const char* key, int def, ordered_json& eff,
              const std::string& context) {
  if (j.contains(key)) {
    if (!j.at(key).is_number_integer()) {
      throw Error(ErrorCode::parse_error, context + key + ": expected an integer");
    }
    def = j.at(key).get<int>();
  }
  eff[key] = def;
  return def;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_field(const json& j, const char* key,
                                      const Eigen::Matrix<double, N, 1>& def, ordered_json& eff,
                                      const std::string& context) {
  Eigen::Matrix<double, N, 1> v = def;
  if (j.contains(key)) v = get_vector<N>(j.at(key), context + key);
  eff[key] = std::vector<double>(v.data(), v.data() + N);
  return v;
}

}  // namespace

ScenarioBundle load_scenario_json(const json& root) {
  if (!root.is_object()) throw Error(ErrorCode::parse_error, "scenario: expected a JSON object");
  reject_unknown_keys(root, {"name", "quadrotor", "channel", "mission", "scp"}, "");

  ScenarioBundle bundle;
  Scenario& sc = bundle.scenario;
  ScpConfig& cfg = bundle.config;
  ordered_json& eff = bundle.effective;

  sc.name = root.value("name", "scenario");
  eff["name"] = sc.name;

  const json quad = root.value("quadrotor", json::object());
  reject_unknown_keys(quad,
                      {"mass_kg", "inertia_kgm2", "arm_length_m", "gravity_mps2", "max_roll_deg",
                       "max_pitch_deg", "max_thrust_n", "max_torque_nm"},
                      "quadrotor.");
  ordered_json& equad = eff["quadrotor"];
  sc.quad.mass = field(quad, "mass_kg", 3.0, equad, "quadrotor.");
  sc.quad.inertia = vec_field<3>(quad, "inertia_kgm2", Vec3(0.04, 0.04, 0.08), equad, "quadrotor.");
  sc.quad.arm_length = field(quad, "arm_length_m", 0.3, equad, "quadrotor.");
  sc.quad.gravity = field(quad, "gravity_mps2", 9.80665, equad, "quadrotor.");
  sc.quad.max_roll = kDegToRad * field(quad, "max_roll_deg", 35.0, equad, "quadrotor.");
  sc.quad.max_pitch = kDegToRad * field(quad, "max_pitch_deg", 35.0, equad, "quadrotor.");
  sc.quad.max_thrust = field(quad, "max_thrust_n", 2.5 * sc.quad.mass * sc.quad.gravity, equad,
                             "quadrotor.");
  sc.quad.max_torque = vec_field<3>(quad, "max_torque_nm", Vec3::Ones(), equad, "quadrotor.");

  const json chan = root.value("channel", json::object());
  reject_unknown_keys(chan,
                      {"a1", "a2", "reflection_attenuation", "path_loss_exponent",
                       "snr_constant_b", "bandwidth_hz", "ground_station_m"},
                      "channel.");
  ordered_json& echan = eff["channel"];
  sc.channel.a1 = field(chan, "a1", 10.0, echan, "channel.");
  sc.channel.a2 = field(chan, "a2", 0.6, echan, "channel.");
  sc.channel.reflection = field(chan, "reflection_attenuation", 0.2, echan, "channel.");
  sc.channel.path_loss_exp = field(chan, "path_loss_exponent", 2.3, echan, "channel.");
  sc.channel.snr_b = field(chan, "snr_constant_b", 60.0, echan, "channel.");
  sc.channel.bandwidth = field(chan, "bandwidth_hz", 1.0e6, echan, "channel.");
  sc.channel.gs = vec_field<3>(chan, "ground_station_m", Vec3(200, 400, 0), echan, "channel.");

  if (!root.contains("mission")) throw Error(ErrorCode::parse_error, "missing 'mission' block");
  const json mis = root.at("mission");
  reject_unknown_keys(mis,
                      {"start_position_m", "goal_position_m", "q_min_megabytes", "obstacles",
                       "nodes", "t_guess_s", "t_min_s", "t_max_s"},
                      "mission.");
  ordered_json& emis = eff["mission"];
  for (const char* key : {"start_position_m", "goal_position_m", "q_min_megabytes"}) {
    if (!mis.contains(key)) {
      throw Error(ErrorCode::parse_error, std::string("mission.") + key + " is required");
    }
  }
  sc.x_start = Vec12::Zero();
  sc.x_goal = Vec12::Zero();
  sc.x_start.segment<3>(sx::pos) =
      vec_field<3>(mis, "start_position_m", Vec3::Zero(), emis, "mission.");
  sc.x_goal.segment<3>(sx::pos) =
      vec_field<3>(mis, "goal_position_m", Vec3::Zero(), emis, "mission.");
  const double q_mb = field(mis, "q_min_megabytes", 0.0, emis, "mission.");
  if (q_mb < 0.0) {
    throw Error(ErrorCode::invalid_scenario, "mission.q_min_megabytes: must be nonnegative");
  }
  sc.channel.q_min_bits = q_mb * kBitsPerMegabyte;

  emis["obstacles"] = ordered_json::array();
  if (mis.contains("obstacles")) {
    if (!mis.at("obstacles").is_array()) {
      throw Error(ErrorCode::parse_error, "mission.obstacles: expected an array");
    }
    for (const json& jo : mis.at("obstacles")) {
      reject_unknown_keys(jo, {"center_xy_m", "safe_radius_m"}, "mission.obstacles[].");
      if (!jo.contains("center_xy_m") || !jo.contains("safe_radius_m")) {
        throw Error(ErrorCode::parse_error,
                    "mission.obstacles[]: center_xy_m and safe_radius_m are required");
      }
      Obstacle ob;
      ob.center_xy = get_vector<2>(jo.at("center_xy_m"), "mission.obstacles[].center_xy_m");
      ob.safe_radius = get_number(jo.at("safe_radius_m"), "mission.obstacles[].safe_radius_m");
      sc.obstacles.push_back(ob);
      emis["obstacles"].push_back(ordered_json{
          {"center_xy_m", {ob.center_xy(0), ob.center_xy(1)}}, {"safe_radius_m", ob.safe_radius}});
    }
  }
  sc.nodes = int_field(mis, "nodes", 100, emis, "mission.");
  sc.t_guess = field(mis, "t_guess_s", 600.0, emis, "mission.");
  sc.t_min = field(mis, "t_min_s", 10.0, emis, "mission.");
  sc.t_max = field(mis, "t_max_s", 2000.0, emis, "mission.");

  const json scp = root.value("scp", json::object());
  reject_unknown_keys(scp,
                      {"lambda", "eps", "iter_max", "rho0", "rho1", "rho2", "alpha", "trust_init",
                       "trust_min", "trust_max", "stall_rejections"},
                      "scp.");
  ordered_json& escp = eff["scp"];
  cfg.lambda = field(scp, "lambda", 1.0e3, escp, "scp.");
  cfg.eps = field(scp, "eps", 1.0e-4, escp, "scp.");
  cfg.iter_max = int_field(scp, "iter_max", 50, escp, "scp.");
  cfg.rho0 = field(scp, "rho0", 0.01, escp, "scp.");
  cfg.rho1 = field(scp, "rho1", 0.25, escp, "scp.");
  cfg.rho2 = field(scp, "rho2", 0.7, escp, "scp.");
  cfg.alpha = field(scp, "alpha", 2.0, escp, "scp.");
  cfg.trust_init = field(scp, "trust_init", 1.0, escp, "scp.");
  cfg.trust_min = field(scp, "trust_min", 1.0e-4, escp, "scp.");
  cfg.trust_max = field(scp, "trust_max", 64.0, escp, "scp.");
  cfg.stall_rejections = int_field(scp, "stall_rejections", 10, escp, "scp.");

  sc.validate();
  cfg.validate();
  return bundle;
}

ScenarioBundle load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io_error, "cannot open scenario file: " + path);
  json root;
  try {
    root = json::parse(is);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, path + ": " + e.what());
  }
  try {
    return load_scenario_json(root);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void override_scp(ScenarioBundle& bundle, const std::string& key, double value) {
  bundle.effective["scp"][key] = value;
  if (key == "lambda") bundle.config.lambda = value;
  else if (key == "eps") bundle.config.eps = value;
  else if (key == "trust_init") bundle.config.trust_init = value;
  else throw Error(ErrorCode::parse_error, "unknown scp override: " + key);
  bundle.config.validate();
}

void override_scp(ScenarioBundle& bundle, const std::string& key, int value) {
  bundle.effective["scp"][key] = value;
  if (key == "iter_max") bundle.config.iter_max = value;
  else throw Error(ErrorCode::parse_error, "unknown scp override: " + key);
  bundle.config.validate();
}

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, "cannot open for writing: " + path);
  os << content;
  if (!os) throw Error(ErrorCode::io_error, "write failed: " + path);
}

}  // namespace

ordered_json audit_to_json(const AuditReport& report) {
  ordered_json j;
  j["passed"] = report.passed;
  j["terminal_pos_err_m"] = report.terminal_pos_err;
  j["terminal_vel_err_mps"] = report.terminal_vel_err;
  j["terminal_att_err_rad"] = report.terminal_att_err;
  j["terminal_rate_err_radps"] = report.terminal_rate_err;
  j["min_obstacle_margin_m"] =
      std::isfinite(report.min_obstacle_margin) ? json(report.min_obstacle_margin) : json(nullptr);
  j["achieved_throughput_bits"] = report.achieved_throughput;
  j["energy"] = report.energy;
  j["bound_violations"] = ordered_json::array();
  for (const auto& v : report.bound_violations) {
    j["bound_violations"].push_back(
        ordered_json{{"node", v.node}, {"constraint", v.constraint}, {"magnitude", v.magnitude}});
  }
  return j;
}

ordered_json record_to_json(const IterationRecord& rec) {
  auto num_or_null = [](double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
  };
  ordered_json j;
  j["iter"] = rec.iter;
  j["j_hat_ref"] = rec.j_hat_ref;
  j["l_star"] = num_or_null(rec.l_star);
  j["j_hat_star"] = num_or_null(rec.j_hat_star);
  j["rho"] = num_or_null(rec.rho);
  j["trust"] = rec.trust;
  j["accepted"] = rec.accepted;
  j["nu_norm"] = rec.nu_norm;
  j["nus_norm"] = rec.nus_norm;
  j["max_defect"] = rec.max_defect;
  j["t_current"] = rec.t_current;
  j["terminal"] = rec.terminal;
  j["solver_failed"] = rec.solver_failed;
  return j;
}

void emit_outputs(const SolveResult& result, const AuditReport& report,
                  const ScenarioBundle& bundle, const std::string& outdir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create output directory: " + outdir);
  const fs::path dir(outdir);

  const Scenario& sc = bundle.scenario;
  const Trajectory& traj = result.traj;
  const int n = traj.node_count();

  // Node table with per-node rate and running throughput.
  {
    std::ostringstream os;
    os << "tau,t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,roll_rad,pitch_rad,yaw_rad,"
          "p_radps,q_radps,r_radps,thrust_n,torque_x_nm,torque_y_nm,torque_z_nm,"
          "rate_bps,q_cum_bits\n";
    std::vector<double> rates(n);
    for (int k = 0; k < n; ++k) {
      rates[k] = expected_rate(traj.x[k].segment<3>(sx::pos), sc.channel);
    }
    double q_cum = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k > 0) q_cum += 0.5 * traj.dtau() * traj.T * (rates[k - 1] + rates[k]);
      os << format_value(traj.tau(k)) << "," << format_value(traj.T * traj.tau(k));
      for (int i = 0; i < 12; ++i) os << "," << format_value(traj.x[k](i));
      for (int i = 0; i < 4; ++i) os << "," << format_value(traj.u[k](i));
      os << "," << format_value(rates[k]) << "," << format_value(q_cum) << "\n";
    }
    write_file((dir / "trajectory.csv").string(), os.str());
  }

  {
    std::ostringstream os;
    for (const auto& rec : result.log) os << record_to_json(rec).dump() << "\n";
    write_file((dir / "iterations.jsonl").string(), os.str());
  }

  write_file((dir / "audit.json").string(), audit_to_json(report).dump(2) + "\n");

  {
    ordered_json j;
    j["name"] = sc.name;
    j["status"] = to_string(result.status);
    j["iterations"] = result.log.size();
    j["t_final_s"] = traj.T;
    j["energy"] = result.energy;
    j["throughput_bits"] = result.throughput_bits;
    j["q_min_bits"] = sc.channel.q_min_bits;
    j["final_gap"] = result.final_gap;
    j["audit_passed"] = report.passed;
    write_file((dir / "summary.json").string(), j.dump(2) + "\n");
  }

  write_file((dir / "config_effective.json").string(), bundle.effective.dump(2) + "\n");

  // Plot-ready point lists: optimized path next to the straight-line guess.
  {
    const Trajectory guess = initial_guess(sc);
    std::ostringstream top, iso;
    top << "x_guess_m,y_guess_m,x_m,y_m\n";
    iso << "x_guess_m,y_guess_m,z_guess_m,x_m,y_m,z_m\n";
    for (int k = 0; k < n; ++k) {
      const Vec3 pg = guess.x[k].segment<3>(sx::pos);
      const Vec3 p = traj.x[k].segment<3>(sx::pos);
      top << format_value(pg(0)) << "," << format_value(pg(1)) << "," << format_value(p(0)) << ","
          << format_value(p(1)) << "\n";
      iso << format_value(pg(0)) << "," << format_value(pg(1)) << "," << format_value(pg(2)) << ","
          << format_value(p(0)) << "," << format_value(p(1)) << "," << format_value(p(2)) << "\n";
    }
    write_file((dir / "topview.csv").string(), top.str());
    write_file((dir / "isometric.csv").string(), iso.str());
  }
}

LoadedTrajectory load_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io_error, "cannot open trajectory file: " + path);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::parse_error, path + ": empty file");

  LoadedTrajectory out;
  double t_last = 0.0;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> vals;
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 18) {
      throw Error(ErrorCode::parse_error,
                  path + ":" + std::to_string(lineno) + ": expected at least 18 columns");
    }
    Vec12 x;
    for (int i = 0; i < 12; ++i) x(i) = vals[2 + i];
    Vec4 u;
    for (int i = 0; i < 4; ++i) u(i) = vals[14 + i];
    out.x.push_back(x);
    out.u.push_back(u);
    t_last = vals[1];
  }
  if (out.x.size() < 2) throw Error(ErrorCode::parse_error, path + ": need at least 2 rows");
  out.T = t_last;
  return out;
}

}  // namespace ctop
