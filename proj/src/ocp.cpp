#include "ctop/ocp.hpp"

#include "ctop/channel.hpp"
#include "ctop/discretization.hpp"

#include <cmath>

namespace ctop {

Trajectory initial_guess(const Scenario& sc) {
  sc.validate();
  const int n = sc.nodes;
  const Vec4 hover = sc.quad.hover_wrench();

  Trajectory traj;
  traj.T = sc.t_guess;
  traj.x.resize(n);
  traj.u.resize(n);
  for (int k = 0; k < n; ++k) {
    const double tau = static_cast<double>(k) / (n - 1);
    traj.x[k] = sc.x_start + tau * (sc.x_goal - sc.x_start);
    traj.u[k] = hover;
  }
  traj.x.front() = sc.x_start;
  traj.x.back() = sc.x_goal;
  return traj;
}

double energy_cost(const Trajectory& traj) {
  const int n = traj.node_count();
  // Exact integral of T u'u under zero-order hold: u(tau) = u_k on
  // [tau_k, tau_{k+1}). Trapezoidal weighting of node controls would
  // underweight the boundary nodes relative to their dynamic influence and
  // reward thrust spikes there.
  double acc = 0.0;
  for (int k = 0; k + 1 < n; ++k) acc += traj.u[k].squaredNorm();
  return traj.T * acc / (n - 1);
}

NonconvexResiduals nonconvex_residuals(const Trajectory& traj, const Scenario& sc) {
  const int n = traj.node_count();
  NonconvexResiduals res;
  res.obstacle.resize(static_cast<int>(sc.obstacles.size()), n);
  for (size_t j = 0; j < sc.obstacles.size(); ++j) {
    const auto& ob = sc.obstacles[j];
    for (int k = 0; k < n; ++k) {
      const Vec2 p = traj.x[k].segment<2>(sx::pos);
      res.obstacle(static_cast<int>(j), k) = ob.safe_radius - (p - ob.center_xy).norm();
    }
  }
  res.has_throughput = sc.channel.q_min_bits > 0.0;
  if (res.has_throughput) {
    res.throughput = sc.channel.q_min_bits - throughput(traj, sc.channel);
  }
  return res;
}

ConstraintLinearization linearize_nonconvex(const Trajectory& ref, const Scenario& sc) {
  const int n = ref.node_count();
  ConstraintLinearization lin;

  for (size_t j = 0; j < sc.obstacles.size(); ++j) {
    const auto& ob = sc.obstacles[j];
    for (int k = 0; k < n; ++k) {
      const Vec2 p = ref.x[k].segment<2>(sx::pos);
      const Vec2 d = p - ob.center_xy;
      const double dist = d.norm();
      if (dist < 1e-9) {
        throw Error(ErrorCode::degenerate_reference,
                    "reference node coincides with obstacle center");
      }
      ObstacleRow row;
      row.obstacle = static_cast<int>(j);
      row.node = k;
      row.grad_xy = -d / dist;
      const double value = ob.safe_radius - dist;
      row.residue = value - row.grad_xy.dot(p);
      lin.obstacle_rows.push_back(row);
    }
  }

  if (sc.channel.q_min_bits > 0.0) {
    ThroughputRow row;
    row.grad_pos.resize(n);
    const auto w = trapz_weights(n);
    std::vector<double> rates(n);
    double affine = 0.0;
    for (int k = 0; k < n; ++k) {
      const Vec3 r = ref.x[k].segment<3>(sx::pos);
      rates[k] = expected_rate(r, sc.channel);
      row.grad_pos[k] = -ref.T * w[k] * rate_gradient(r, sc.channel);
      affine += row.grad_pos[k].dot(r);
    }
    row.grad_T = -trapz(rates);
    const double value = sc.channel.q_min_bits - ref.T * trapz(rates);
    row.residue = value - affine - row.grad_T * ref.T;
    lin.throughput_row = row;
  }
  return lin;
}

double evaluate_obstacle_row(const ObstacleRow& row, const Trajectory& traj) {
  return row.grad_xy.dot(traj.x[row.node].segment<2>(sx::pos)) + row.residue;
}

double evaluate_throughput_row(const ThroughputRow& row, const Trajectory& traj) {
  double value = row.residue + row.grad_T * traj.T;
  for (size_t k = 0; k < row.grad_pos.size(); ++k) {
    value += row.grad_pos[k].dot(traj.x[k].segment<3>(sx::pos));
  }
  return value;
}

}  // namespace ctop
