#pragma once

#include "ctop/channel.hpp"
#include "ctop/quadrotor.hpp"
#include "ctop/types.hpp"

namespace ctop {

// Vertical cylinder keep-out region, horizontal distance only.
struct Obstacle {
  Vec2 center_xy{0.0, 0.0};
  double safe_radius = 0.0;  // m
};

struct Scenario {
  std::string name = "scenario";
  Vec12 x_start = Vec12::Zero();
  Vec12 x_goal = Vec12::Zero();
  std::vector<Obstacle> obstacles;
  QuadrotorParams quad;
  ChannelParams channel;
  int nodes = 100;
  double t_guess = 600.0;  // s
  double t_min = 10.0;     // s
  double t_max = 2000.0;   // s

  void validate() const;
};

// Trust-region SCP settings. Thresholds order 0 < rho0 < rho1 < rho2 < 1;
// lambda weights the exact (1-norm) penalty on virtual controls and buffers.
struct ScpConfig {
  double lambda = 1.0e3;
  double eps = 1.0e-4;
  int iter_max = 50;
  double rho0 = 0.01;
  double rho1 = 0.25;
  double rho2 = 0.7;
  double alpha = 2.0;
  double trust_init = 1.0;
  double trust_min = 1.0e-4;
  double trust_max = 64.0;
  int stall_rejections = 10;

  // Feasibility thresholds a run must meet to be declared converged.
  double feas_virtual = 1.0e-6;    // scaled 1-norm of virtual controls/buffers
  double feas_defect = 1.0e-4;     // scaled max dynamics defect
  double feas_margin = 1.0e-3;     // m, obstacle margin slack
  double feas_throughput = 1.0e-4; // relative throughput slack

  void validate() const;
};

}  // namespace ctop
