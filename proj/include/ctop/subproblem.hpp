#pragma once

#include "ctop/discretization.hpp"
#include "ctop/ocp.hpp"
#include "ctop/qp.hpp"
#include "ctop/scenario.hpp"

namespace ctop {

// Affine scaling bringing decision variables, penalties, and the running cost
// to O(1). Position and time scales come from the scenario extents; the
// energy unit is the hover cost over the guessed mission time.
struct Scaling {
  Vec12 state = Vec12::Ones();
  Vec4 control = Vec4::Ones();
  double time = 1.0;
  double energy = 1.0;
  double length = 1.0;
  double qbits = 1.0;

  static Scaling identity() { return {}; }
  static Scaling from_scenario(const Scenario& sc);
};

// Discrete convex subproblem in canonical QP form, plus the bookkeeping to
// map the solution back to a trajectory.
struct SubproblemSpec {
  QpProblem qp;
  Eigen::VectorXd start_point;  // strictly feasible-ish hint at the reference

  int n_nodes = 0;
  int n_obs = 0;
  bool has_throughput = false;
  int off_x = 0, off_u = 0, off_t = 0, off_nup = 0, off_num = 0;
  int off_beta = 0, off_betaq = 0, off_ex = 0, off_eu = 0, off_et = 0;

  Scaling scaling;
  Trajectory reference;
  double lambda = 0.0;
  double trust = 0.0;
  std::vector<double> node_weights;  // trapezoidal
};

enum class SubproblemStatus { optimal, near_optimal, infeasible, numerical_failure };

struct SubproblemSolution {
  Trajectory traj;
  double nu_norm = 0.0;      // scaled 1-norm sum of dynamics virtual controls
  double nus_norm = 0.0;     // scaled 1-norm sum of constraint buffers
  double objective_L = 0.0;  // penalized linearized cost of the solution
  SubproblemStatus status = SubproblemStatus::numerical_failure;
  int qp_iterations = 0;
};

SubproblemSpec assemble(const Trajectory& ref, const DiscretizedSystem& disc,
                        const ConstraintLinearization& lin, const Scenario& sc,
                        const ScpConfig& cfg, double trust, const Scaling& scaling);

SubproblemSolution solve(const SubproblemSpec& spec);

// Penalized linearized cost of an arbitrary assembled-variable assignment,
// reconstructed from trajectory and virtual-control values.
double linearized_cost(const SubproblemSpec& spec, const Trajectory& traj, double nu_weighted,
                       double nus_weighted);

}  // namespace ctop
