#include "ctop/scp.hpp"

#include "ctop/channel.hpp"
#include "ctop/ocp.hpp"

#include <cmath>
#include <limits>

namespace ctop {

PenalizedCost penalized_cost_detail(const Trajectory& traj, const Scenario& sc, double lambda,
                                    const Scaling& scaling, ExecPolicy policy) {
  PenalizedCost out;
  out.energy = energy_cost(traj);

  const auto defects = dynamics_defects(traj, sc.quad, policy);
  const double dtau = traj.dtau();
  for (const Vec12& d : defects) {
    const Vec12 scaled = d.cwiseQuotient(scaling.state);
    out.defect_term += dtau * scaled.lpNorm<1>();
    out.max_defect = std::max(out.max_defect, scaled.lpNorm<Eigen::Infinity>());
  }

  const auto res = nonconvex_residuals(traj, sc);
  const auto w = trapz_weights(traj.node_count());
  for (int j = 0; j < res.obstacle.rows(); ++j) {
    for (int k = 0; k < res.obstacle.cols(); ++k) {
      out.constraint_term += w[k] * std::max(res.obstacle(j, k) / scaling.length, 0.0);
    }
  }
  if (res.has_throughput) {
    out.constraint_term += std::max(res.throughput / scaling.qbits, 0.0);
  }

  out.total = out.energy / scaling.energy + lambda * (out.defect_term + out.constraint_term);
  return out;
}

double penalized_cost(const Trajectory& traj, const Scenario& sc, double lambda) {
  return penalized_cost_detail(traj, sc, lambda, Scaling::identity()).total;
}

double acceptance_ratio(double j_ref, double j_star, double l_star) {
  const double predicted = j_ref - l_star;
  if (std::abs(predicted) < 1e-14) {
    throw Error(ErrorCode::division_guard, "acceptance ratio: predicted reduction below 1e-14");
  }
  return (j_ref - j_star) / predicted;
}

TrustDecision trust_update(double rho, double trust, const ScpConfig& cfg) {
  TrustDecision d;
  if (rho < cfg.rho0) {
    d.accepted = false;
    d.trust = std::max(trust / cfg.alpha, cfg.trust_min);
  } else if (rho < cfg.rho1) {
    d.accepted = true;
    d.trust = std::max(trust / cfg.alpha, cfg.trust_min);
  } else if (rho < cfg.rho2) {
    d.accepted = true;
    d.trust = trust;
  } else {
    d.accepted = true;
    d.trust = std::min(cfg.alpha * trust, cfg.trust_max);
  }
  return d;
}

namespace {

bool reference_feasible(const PenalizedCost& cost, const Trajectory& traj, const Scenario& sc,
                        const ScpConfig& cfg) {
  if (cost.max_defect > cfg.feas_defect) return false;
  const auto res = nonconvex_residuals(traj, sc);
  for (int j = 0; j < res.obstacle.rows(); ++j) {
    for (int k = 0; k < res.obstacle.cols(); ++k) {
      if (res.obstacle(j, k) > cfg.feas_margin) return false;
    }
  }
  if (res.has_throughput &&
      res.throughput > sc.channel.q_min_bits * cfg.feas_throughput) {
    return false;
  }
  return true;
}

}  // namespace

SolveResult run_scp(const Scenario& sc, const ScpConfig& cfg, ExecPolicy policy) {
  sc.validate();
  cfg.validate();

  SolveResult result;
  result.scaling = Scaling::from_scenario(sc);

  Trajectory ref = initial_guess(sc);
  PenalizedCost ref_cost = penalized_cost_detail(ref, sc, cfg.lambda, result.scaling, policy);

  double trust = cfg.trust_init;
  int floor_rejections = 0;
  result.status = SolveStatus::max_iters;

  for (int iter = 1; iter <= cfg.iter_max; ++iter) {
    IterationRecord rec;
    rec.iter = iter;
    rec.j_hat_ref = ref_cost.total;
    rec.trust = trust;
    rec.t_current = ref.T;
    rec.max_defect = ref_cost.max_defect;

    const DiscretizedSystem disc = discretize_trajectory(ref, sc.quad, policy);
    const ConstraintLinearization lin = linearize_nonconvex(ref, sc);
    const SubproblemSpec spec = assemble(ref, disc, lin, sc, cfg, trust, result.scaling);
    const SubproblemSolution sol = solve(spec);

    if (sol.status == SubproblemStatus::infeasible ||
        sol.status == SubproblemStatus::numerical_failure) {
      rec.solver_failed = true;
      rec.accepted = false;
      rec.rho = std::numeric_limits<double>::quiet_NaN();
      rec.l_star = std::numeric_limits<double>::quiet_NaN();
      rec.j_hat_star = std::numeric_limits<double>::quiet_NaN();
      result.log.push_back(rec);
      if (trust <= cfg.trust_min) {
        if (++floor_rejections >= cfg.stall_rejections) {
          result.status = SolveStatus::stalled;
          break;
        }
      }
      trust = std::max(trust / cfg.alpha, cfg.trust_min);
      continue;
    }

    rec.l_star = sol.objective_L;
    rec.nu_norm = sol.nu_norm;
    rec.nus_norm = sol.nus_norm;
    const double gap = ref_cost.total - sol.objective_L;

    if (gap <= cfg.eps) {
      rec.terminal = true;
      rec.rho = std::numeric_limits<double>::quiet_NaN();
      rec.j_hat_star = std::numeric_limits<double>::quiet_NaN();
      result.log.push_back(rec);
      result.final_gap = gap;
      const bool feasible = sol.nu_norm <= cfg.feas_virtual &&
                            sol.nus_norm <= cfg.feas_virtual &&
                            reference_feasible(ref_cost, ref, sc, cfg);
      result.status = feasible ? SolveStatus::converged : SolveStatus::stalled;
      break;
    }

    const PenalizedCost cand_cost =
        penalized_cost_detail(sol.traj, sc, cfg.lambda, result.scaling, policy);
    rec.j_hat_star = cand_cost.total;
    rec.rho = acceptance_ratio(ref_cost.total, cand_cost.total, sol.objective_L);

    const TrustDecision decision = trust_update(rec.rho, trust, cfg);
    rec.accepted = decision.accepted;
    result.log.push_back(rec);
    result.final_gap = gap;

    if (decision.accepted) {
      ref = sol.traj;
      ref_cost = cand_cost;
      floor_rejections = 0;
    } else if (trust <= cfg.trust_min) {
      if (++floor_rejections >= cfg.stall_rejections) {
        result.status = SolveStatus::stalled;
        trust = decision.trust;
        break;
      }
    }
    trust = decision.trust;
  }

  result.traj = ref;
  result.energy = energy_cost(ref);
  result.throughput_bits = throughput(ref, sc.channel);
  return result;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iters:
      return "max_iters";
    case SolveStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

}  // namespace ctop
