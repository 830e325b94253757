#include "ctop/validate.hpp"

#include "ctop/channel.hpp"
#include "ctop/discretization.hpp"

#include <cmath>
#include <limits>

namespace ctop {

FineTrajectory resimulate(const std::vector<Vec4>& controls, double T, const Vec12& x0,
                          const QuadrotorParams& p, int refine, const IntegratorOptions& opt) {
  const int n = static_cast<int>(controls.size());
  if (n < 2) throw Error(ErrorCode::dimension_mismatch, "resimulate needs at least 2 control nodes");
  if (!(T > 0.0)) throw Error(ErrorCode::dimension_mismatch, "resimulate needs T > 0");
  if (refine < 1) refine = 1;

  const int nseg = n - 1;
  const double dtau = 1.0 / nseg;
  const double sub_dt = T * dtau / refine;

  FineTrajectory fine;
  fine.T = T;
  fine.tau.reserve(nseg * refine + 1);
  fine.x.reserve(nseg * refine + 1);
  fine.u.reserve(nseg * refine + 1);

  Vec12 x = x0;
  fine.tau.push_back(0.0);
  fine.x.push_back(x);
  fine.u.push_back(controls[0]);
  for (int k = 0; k < nseg; ++k) {
    for (int s = 1; s <= refine; ++s) {
      try {
        x = flow_zoh(p, x, controls[k], sub_dt, opt);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::singular_attitude || e.code() == ErrorCode::integrator_failure) {
          const double t_fail = T * (k * dtau + (s - 1) * dtau / refine);
          throw Error(e.code(), "resimulation failed at t = " + std::to_string(t_fail) +
                                    " s: " + e.what());
        }
        throw;
      }
      fine.tau.push_back(k * dtau + s * dtau / refine);
      fine.x.push_back(x);
      fine.u.push_back(controls[k]);
    }
  }
  return fine;
}

namespace {

AuditReport run_audit(const std::vector<Vec4>& controls, double T, const Scenario& sc,
                      const AuditTolerances& tol) {
  const FineTrajectory fine = resimulate(controls, T, sc.x_start, sc.quad);
  AuditReport rep;

  rep.terminal_error = fine.x.back() - sc.x_goal;
  rep.terminal_pos_err = rep.terminal_error.segment<3>(sx::pos).norm();
  rep.terminal_vel_err = rep.terminal_error.segment<3>(sx::vel).norm();
  rep.terminal_att_err = rep.terminal_error.segment<3>(sx::att).norm();
  rep.terminal_rate_err = rep.terminal_error.segment<3>(sx::rate).norm();

  rep.min_obstacle_margin = std::numeric_limits<double>::infinity();
  for (const auto& ob : sc.obstacles) {
    for (const Vec12& x : fine.x) {
      const double margin = (x.segment<2>(sx::pos) - ob.center_xy).norm() - ob.safe_radius;
      rep.min_obstacle_margin = std::min(rep.min_obstacle_margin, margin);
    }
  }

  std::vector<double> rates(fine.x.size());
  for (size_t i = 0; i < fine.x.size(); ++i) {
    rates[i] = expected_rate(fine.x[i].segment<3>(sx::pos), sc.channel);
  }
  rep.achieved_throughput = T * trapz(rates);

  // ZOH controls integrate exactly as a rectangle sum per segment.
  const int nseg = static_cast<int>(controls.size()) - 1;
  double usq = 0.0;
  for (int k = 0; k < nseg; ++k) usq += controls[k].squaredNorm();
  rep.energy = T / nseg * usq;

  for (size_t k = 0; k < controls.size(); ++k) {
    const Vec4& u = controls[k];
    if (u(0) < -tol.control_slack) {
      rep.bound_violations.push_back({static_cast<int>(k), "thrust_min", -u(0)});
    }
    if (u(0) > sc.quad.max_thrust + tol.control_slack) {
      rep.bound_violations.push_back({static_cast<int>(k), "thrust_max", u(0) - sc.quad.max_thrust});
    }
    for (int i = 0; i < 3; ++i) {
      const double over = std::abs(u(1 + i)) - sc.quad.max_torque(i);
      if (over > tol.control_slack) {
        rep.bound_violations.push_back({static_cast<int>(k), "torque_" + std::to_string(i), over});
      }
    }
  }
  for (size_t i = 0; i < fine.x.size(); ++i) {
    const double roll_over = std::abs(fine.x[i](sx::att + 0)) - sc.quad.max_roll;
    const double pitch_over = std::abs(fine.x[i](sx::att + 1)) - sc.quad.max_pitch;
    if (roll_over > tol.attitude_slack) {
      rep.bound_violations.push_back({static_cast<int>(i), "roll", roll_over});
    }
    if (pitch_over > tol.attitude_slack) {
      rep.bound_violations.push_back({static_cast<int>(i), "pitch", pitch_over});
    }
  }

  const bool obstacles_ok =
      sc.obstacles.empty() || rep.min_obstacle_margin >= -tol.obstacle_slack;
  const bool throughput_ok =
      sc.channel.q_min_bits <= 0.0 ||
      rep.achieved_throughput >= sc.channel.q_min_bits * (1.0 - tol.throughput_slack);
  rep.passed = rep.terminal_pos_err <= tol.terminal_pos &&
               rep.terminal_vel_err <= tol.terminal_vel &&
               rep.terminal_att_err <= tol.terminal_att &&
               rep.terminal_rate_err <= tol.terminal_rate && obstacles_ok && throughput_ok &&
               rep.bound_violations.empty();
  return rep;
}

}  // namespace

AuditReport audit(const SolveResult& sol, const Scenario& sc, const AuditTolerances& tol) {
  return run_audit(sol.traj.u, sol.traj.T, sc, tol);
}

AuditReport audit_controls(const std::vector<Vec4>& controls, double T, const Scenario& sc,
                           const AuditTolerances& tol) {
  return run_audit(controls, T, sc, tol);
}

}  // namespace ctop
