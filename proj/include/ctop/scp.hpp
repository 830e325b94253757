#pragma once

#include "ctop/discretization.hpp"
#include "ctop/scenario.hpp"
#include "ctop/subproblem.hpp"

#include <vector>

namespace ctop {

// Exact-penalty cost of a trajectory: energy plus lambda times the 1-norms of
// dynamics defects and positive parts of the nonconvex constraint residuals,
// under trapezoidal weighting. The scaling argument selects the working units;
// identity gives the raw-unit value.
struct PenalizedCost {
  double total = 0.0;        // scaled penalized cost
  double energy = 0.0;       // raw energy, trapz of T u'u
  double defect_term = 0.0;  // scaled, before lambda
  double constraint_term = 0.0;
  double max_defect = 0.0;   // scaled inf-norm over segments
};

PenalizedCost penalized_cost_detail(const Trajectory& traj, const Scenario& sc, double lambda,
                                    const Scaling& scaling,
                                    ExecPolicy policy = ExecPolicy::parallel);

double penalized_cost(const Trajectory& traj, const Scenario& sc, double lambda);

// rho = (J_ref - J_star) / (J_ref - L_star), Eq. of trust-region acceptance.
double acceptance_ratio(double j_ref, double j_star, double l_star);

struct TrustDecision {
  double trust = 0.0;
  bool accepted = false;
};
TrustDecision trust_update(double rho, double trust, const ScpConfig& cfg);

enum class SolveStatus { converged, max_iters, stalled };

struct IterationRecord {
  int iter = 0;
  double j_hat_ref = 0.0;
  double l_star = 0.0;
  double j_hat_star = 0.0;
  double rho = 0.0;
  double trust = 0.0;
  bool accepted = false;
  double nu_norm = 0.0;
  double nus_norm = 0.0;
  double max_defect = 0.0;
  double t_current = 0.0;
  bool terminal = false;       // stopping-criterion record, no accept decision
  bool solver_failed = false;  // subproblem solve failed, treated as rejection
};

struct SolveResult {
  Trajectory traj;  // last accepted iterate
  SolveStatus status = SolveStatus::max_iters;
  std::vector<IterationRecord> log;
  double energy = 0.0;
  double throughput_bits = 0.0;
  double final_gap = 0.0;
  Scaling scaling;
};

SolveResult run_scp(const Scenario& sc, const ScpConfig& cfg,
                    ExecPolicy policy = ExecPolicy::parallel);

const char* to_string(SolveStatus status);

}  // namespace ctop
