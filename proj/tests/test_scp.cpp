#include "ctop/scp.hpp"

#include "ctop/channel.hpp"
#include "ctop/ocp.hpp"
#include "ctop/validate.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctop;

namespace {

Scenario hover_scenario() {
  Scenario sc;
  sc.name = "hover";
  sc.x_start.segment<3>(sx::pos) = Vec3(0, 0, 40);
  sc.x_goal = sc.x_start;
  sc.channel.q_min_bits = 0.0;
  sc.nodes = 20;
  sc.t_guess = 100.0;
  sc.t_min = 50.0;
  sc.t_max = 400.0;
  return sc;
}

Scenario relay_scenario() {
  Scenario sc;
  sc.name = "relay";
  sc.x_start.segment<3>(sx::pos) = Vec3(0, 0, 20);
  sc.x_goal.segment<3>(sx::pos) = Vec3(100, 60, 30);
  sc.channel.gs = Vec3(40, 50, 0);
  sc.channel.q_min_bits = 8e5;  // 0.1 MB
  sc.nodes = 20;
  sc.t_guess = 80.0;
  sc.t_min = 10.0;
  sc.t_max = 600.0;
  return sc;
}

// Shared log checks: nonnegative predicted reductions, monotone accepted
// penalized cost, and exact trust contraction on every rejection.
void check_log_invariants(const std::vector<IterationRecord>& log, const ScpConfig& cfg) {
  double last_accepted_cost = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < log.size(); ++i) {
    const auto& rec = log[i];
    if (!rec.solver_failed && std::isfinite(rec.l_star)) {
      CHECK(rec.j_hat_ref - rec.l_star >= -1e-9);
    }
    if (rec.accepted) {
      CHECK(rec.j_hat_star <= last_accepted_cost + 1e-9);
      last_accepted_cost = rec.j_hat_star;
    }
    if (i + 1 < log.size() && !rec.terminal && !rec.accepted) {
      const double expect = std::max(rec.trust / cfg.alpha, cfg.trust_min);
      CHECK(log[i + 1].trust == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

}  // namespace

TEST_SUITE("scp") {

TEST_CASE("acceptance ratio arithmetic and guard") {
  CHECK(acceptance_ratio(100.0, 40.0, 20.0) == doctest::Approx(0.75));
  CHECK(acceptance_ratio(100.0, 40.0, 40.0) == doctest::Approx(1.0));
  CHECK(acceptance_ratio(100.0, 100.0, 40.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(acceptance_ratio(100.0, 90.0, 100.0 - 1e-15), Error);
}

TEST_CASE("trust region update covers the four branches") {
  ScpConfig cfg;  // rho thresholds 0.01 / 0.25 / 0.7, alpha 2
  auto d = trust_update(-0.5, 8.0, cfg);
  CHECK_FALSE(d.accepted);
  CHECK(d.trust == doctest::Approx(4.0));

  d = trust_update(0.1, 8.0, cfg);
  CHECK(d.accepted);
  CHECK(d.trust == doctest::Approx(4.0));

  d = trust_update(0.5, 8.0, cfg);
  CHECK(d.accepted);
  CHECK(d.trust == doctest::Approx(8.0));

  d = trust_update(0.9, 40.0, cfg);
  CHECK(d.accepted);
  CHECK(d.trust == doctest::Approx(64.0));  // capped at trust_max

  d = trust_update(-1.0, 1.5e-4, cfg);
  CHECK_FALSE(d.accepted);
  CHECK(d.trust == doctest::Approx(cfg.trust_min));  // floored
}

TEST_CASE("penalized cost reduces to energy when feasible and exact") {
  Scenario sc = hover_scenario();
  Trajectory traj;
  traj.T = 120.0;
  for (int k = 0; k < 6; ++k) {
    traj.x.push_back(sc.x_start);
    traj.u.push_back(sc.quad.hover_wrench());
  }
  const double energy = energy_cost(traj);
  CHECK(penalized_cost(traj, sc, 1e3) == doctest::Approx(energy).epsilon(1e-12));
  CHECK(penalized_cost(traj, sc, 0.0) == doctest::Approx(energy).epsilon(1e-12));
}

TEST_CASE("an interior obstacle violation charges lambda times the node weight") {
  Scenario sc = hover_scenario();
  Trajectory traj;
  traj.T = 60.0;
  for (int k = 0; k < 5; ++k) {
    Vec12 x = Vec12::Zero();
    x.segment<3>(sx::pos) = Vec3(20.0 * k, 0, 40);
    traj.x.push_back(x);
    traj.u.push_back(sc.quad.hover_wrench());
  }
  const double lambda = 250.0;
  const double base = penalized_cost(traj, sc, lambda);

  // A circle of radius 10 about node 2 leaves a violation of 10 m there and
  // keeps every other node outside.
  sc.obstacles.push_back({Vec2(40, 0), 10.0});
  const double bumped = penalized_cost(traj, sc, lambda);
  const double dtau = traj.dtau();
  CHECK(bumped - base == doctest::Approx(lambda * 10.0 * dtau).epsilon(1e-10));
}

TEST_CASE("hover mission collapses to minimum time at the hover wrench") {
  const Scenario sc = hover_scenario();
  ScpConfig cfg;
  const SolveResult result = run_scp(sc, cfg, ExecPolicy::serial);

  REQUIRE(result.status == SolveStatus::converged);
  CHECK(result.traj.T == doctest::Approx(sc.t_min).epsilon(0.01));
  const double hover = sc.quad.hover_thrust();
  for (int k = 1; k + 1 < sc.nodes; ++k) {
    CHECK(std::abs(result.traj.u[k](0) - hover) / hover < 0.01);
  }
  CHECK(result.energy ==
        doctest::Approx(sc.t_min * hover * hover).epsilon(0.02));
  check_log_invariants(result.log, cfg);

  // Terminal record carries the stopping gap.
  REQUIRE(!result.log.empty());
  CHECK(result.log.back().terminal);
  CHECK(result.final_gap <= cfg.eps);
}

TEST_CASE("relay mission converges, meets throughput, and passes audit") {
  const Scenario sc = relay_scenario();
  ScpConfig cfg;
  const SolveResult result = run_scp(sc, cfg, ExecPolicy::parallel);

  REQUIRE(result.status == SolveStatus::converged);
  CHECK(result.throughput_bits >= sc.channel.q_min_bits * (1.0 - 1e-4));
  check_log_invariants(result.log, cfg);

  const AuditReport report = audit(result, sc);
  CHECK(report.passed);
  CHECK(report.achieved_throughput >= sc.channel.q_min_bits * (1.0 - 1e-3));

  // Converged means the virtual controls vanished.
  const auto& last = result.log.back();
  CHECK(last.nu_norm <= cfg.feas_virtual);
  CHECK(last.nus_norm <= cfg.feas_virtual);
}

TEST_CASE("identical runs produce identical logs") {
  const Scenario sc = relay_scenario();
  ScpConfig cfg;
  cfg.iter_max = 8;
  const SolveResult a = run_scp(sc, cfg, ExecPolicy::parallel);
  const SolveResult b = run_scp(sc, cfg, ExecPolicy::parallel);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].j_hat_ref == b.log[i].j_hat_ref);
    CHECK(a.log[i].l_star == b.log[i].l_star);
    CHECK(a.log[i].trust == b.log[i].trust);
    CHECK(a.log[i].accepted == b.log[i].accepted);
  }
  CHECK(a.traj.T == b.traj.T);
  for (int k = 0; k < sc.nodes; ++k) CHECK(a.traj.x[k] == b.traj.x[k]);
}

}  // TEST_SUITE
