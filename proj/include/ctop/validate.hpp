#pragma once

#include "ctop/scenario.hpp"
#include "ctop/scp.hpp"
#include "ctop/types.hpp"

#include <string>
#include <vector>

namespace ctop {

// Nonlinear re-simulation of a node trajectory on a refined grid.
struct FineTrajectory {
  std::vector<double> tau;
  std::vector<Vec12> x;
  std::vector<Vec4> u;  // ZOH value active at each sample
  double T = 0.0;
};

FineTrajectory resimulate(const std::vector<Vec4>& controls, double T, const Vec12& x0,
                          const QuadrotorParams& p, int refine = 10,
                          const IntegratorOptions& opt = {});

struct AuditTolerances {
  double terminal_pos = 1.0;     // m
  double terminal_vel = 0.1;     // m/s
  double terminal_att = 0.02;    // rad
  double terminal_rate = 0.02;   // rad/s
  double obstacle_slack = 0.5;   // m
  double throughput_slack = 1e-3;
  double control_slack = 1e-6;   // on the optimized wrench bounds
  double attitude_slack = 0.02;  // rad, on the resimulated path
};

struct BoundViolation {
  int node = 0;  // coarse node or fine sample index
  std::string constraint;
  double magnitude = 0.0;
};

struct AuditReport {
  Vec12 terminal_error = Vec12::Zero();
  double terminal_pos_err = 0.0;
  double terminal_vel_err = 0.0;
  double terminal_att_err = 0.0;
  double terminal_rate_err = 0.0;
  double min_obstacle_margin = 0.0;  // min over fine grid of dist - d_s, +inf if no obstacles
  double achieved_throughput = 0.0;  // bits on the resimulated path
  double energy = 0.0;               // exact ZOH integral of T u'u
  std::vector<BoundViolation> bound_violations;
  bool passed = false;
};

AuditReport audit(const SolveResult& sol, const Scenario& sc, const AuditTolerances& tol = {});

// Audit from raw controls, for externally loaded trajectories.
AuditReport audit_controls(const std::vector<Vec4>& controls, double T, const Scenario& sc,
                           const AuditTolerances& tol = {});

}  // namespace ctop
