#pragma once

#include "ctop/scenario.hpp"
#include "ctop/types.hpp"

#include <optional>

namespace ctop {

// Straight-line state interpolation with hover controls; dynamically
// infeasible but a geometrically reasonable starting reference.
Trajectory initial_guess(const Scenario& sc);

// Integral of T * u'u over the normalized grid, exact under ZOH controls.
double energy_cost(const Trajectory& traj);

// Nonconvex constraint values, feasible when <= 0.
// Obstacle (j,k): safe_radius_j - horizontal distance of node k to center j.
// Throughput: q_min - accumulated bits.
struct NonconvexResiduals {
  Eigen::MatrixXd obstacle;  // n_obs x N
  double throughput = 0.0;
  bool has_throughput = false;
};
NonconvexResiduals nonconvex_residuals(const Trajectory& traj, const Scenario& sc);

// First-order models about a reference trajectory, affine remainders included
// so the model reproduces the exact residual at the reference.
struct ObstacleRow {
  int obstacle = 0;
  int node = 0;
  Vec2 grad_xy = Vec2::Zero();  // unit norm, d residual / d (x, y)
  double residue = 0.0;
};

struct ThroughputRow {
  std::vector<Vec3> grad_pos;  // per node, d residual / d r_k
  double grad_T = 0.0;
  double residue = 0.0;
};

struct ConstraintLinearization {
  std::vector<ObstacleRow> obstacle_rows;
  std::optional<ThroughputRow> throughput_row;
};

ConstraintLinearization linearize_nonconvex(const Trajectory& ref, const Scenario& sc);

double evaluate_obstacle_row(const ObstacleRow& row, const Trajectory& traj);
double evaluate_throughput_row(const ThroughputRow& row, const Trajectory& traj);

}  // namespace ctop
