#include "ctop/subproblem.hpp"

#include "ctop/ocp.hpp"
#include "ctop/scp.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctop;

namespace {

Scenario hover_scenario(int nodes, double t_guess) {
  Scenario sc;
  sc.name = "hover";
  sc.x_start.segment<3>(sx::pos) = Vec3(0, 0, 40);
  sc.x_goal = sc.x_start;
  sc.channel.q_min_bits = 0.0;
  sc.nodes = nodes;
  sc.t_guess = t_guess;
  sc.t_min = t_guess;
  sc.t_max = t_guess * 4;
  return sc;
}

Scenario short_mission(int nodes) {
  Scenario sc;
  sc.name = "short_mission";
  sc.x_start.segment<3>(sx::pos) = Vec3(0, 0, 20);
  sc.x_goal.segment<3>(sx::pos) = Vec3(80, 40, 35);
  sc.channel.gs = Vec3(30, 50, 0);
  sc.channel.q_min_bits = 0.0;
  sc.nodes = nodes;
  sc.t_guess = 60.0;
  sc.t_min = 5.0;
  sc.t_max = 400.0;
  return sc;
}

struct Assembled {
  SubproblemSpec spec;
  double j_ref;
};

Assembled assemble_at_guess(const Scenario& sc, const ScpConfig& cfg, double trust) {
  const Trajectory ref = initial_guess(sc);
  const Scaling scaling = Scaling::from_scenario(sc);
  const auto disc = discretize_trajectory(ref, sc.quad, ExecPolicy::serial);
  const auto lin = linearize_nonconvex(ref, sc);
  return {assemble(ref, disc, lin, sc, cfg, trust, scaling),
          penalized_cost_detail(ref, sc, cfg.lambda, scaling, ExecPolicy::serial).total};
}

}  // namespace

TEST_SUITE("subproblem") {

TEST_CASE("no buffers are created without obstacles or throughput demand") {
  const Scenario sc = hover_scenario(8, 80.0);
  const ScpConfig cfg;
  const auto [spec, j_ref] = assemble_at_guess(sc, cfg, 1.0);
  CHECK(spec.n_obs == 0);
  CHECK_FALSE(spec.has_throughput);
  CHECK(spec.off_betaq == spec.off_beta);  // empty buffer section
  CHECK(spec.off_ex == spec.off_betaq);
}

TEST_CASE("a stationary feasible reference solves to itself") {
  const Scenario sc = hover_scenario(8, 80.0);
  const ScpConfig cfg;
  const auto [spec, j_ref] = assemble_at_guess(sc, cfg, 1.0);
  const SubproblemSolution sol = solve(spec);

  REQUIRE(sol.status == SubproblemStatus::optimal);
  CHECK(sol.objective_L <= j_ref + 1e-9);
  CHECK(sol.nu_norm < 1e-6);
  CHECK(sol.traj.T == doctest::Approx(sc.t_guess).epsilon(1e-7));
  const Trajectory ref = initial_guess(sc);
  for (int k = 0; k < sc.nodes; ++k) {
    CHECK((sol.traj.x[k] - ref.x[k]).cwiseAbs().maxCoeff() < 1e-2);
    CHECK(std::abs(sol.traj.u[k](0) - ref.u[k](0)) < 1e-3);
  }
}

TEST_CASE("a vanishing trust region pins the solution to the reference") {
  const Scenario sc = short_mission(8);
  const ScpConfig cfg;
  const auto [spec, j_ref] = assemble_at_guess(sc, cfg, 1e-5);
  const SubproblemSolution sol = solve(spec);
  REQUIRE((sol.status == SubproblemStatus::optimal ||
           sol.status == SubproblemStatus::near_optimal));

  const Trajectory ref = initial_guess(sc);
  const Scaling scaling = Scaling::from_scenario(sc);
  for (int k = 0; k < sc.nodes; ++k) {
    const Vec12 dx = (sol.traj.x[k] - ref.x[k]).cwiseQuotient(scaling.state);
    CHECK(dx.cwiseAbs().maxCoeff() < 2e-5);
  }
  CHECK(std::abs(sol.traj.T - ref.T) / scaling.time < 2e-5);

  // Pinned to the reference, the model cost reduces to the reference
  // penalized cost; this checks the penalty encoding end to end.
  CHECK(sol.objective_L == doctest::Approx(j_ref).epsilon(1e-5));
}

TEST_CASE("solutions respect bounds, trust region, and predicted reduction") {
  Scenario sc = short_mission(10);
  sc.obstacles.push_back({Vec2(40, 25), 12.0});
  sc.channel.q_min_bits = 1.0e5;
  const ScpConfig cfg;
  const double trust = 1.0;
  const auto [spec, j_ref] = assemble_at_guess(sc, cfg, trust);
  const SubproblemSolution sol = solve(spec);

  REQUIRE(sol.status == SubproblemStatus::optimal);
  CHECK(spec.has_throughput);
  CHECK(spec.n_obs == 1);

  // Theorem-style guarantee: the zero step is feasible, so the model cannot
  // predict worse than the reference cost.
  CHECK(j_ref - sol.objective_L >= -1e-9);

  const Scaling scaling = Scaling::from_scenario(sc);
  const Trajectory ref = initial_guess(sc);
  const double tol = 1e-7;
  for (int k = 0; k < sc.nodes; ++k) {
    CHECK(sol.traj.u[k](0) >= -tol * scaling.control(0));
    CHECK(sol.traj.u[k](0) <= sc.quad.max_thrust + tol * scaling.control(0));
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(sol.traj.u[k](1 + i)) <= sc.quad.max_torque(i) + tol);
    }
    CHECK(std::abs(sol.traj.x[k](sx::att + 0)) <= sc.quad.max_roll + tol);
    CHECK(std::abs(sol.traj.x[k](sx::att + 1)) <= sc.quad.max_pitch + tol);

    const double dx =
        (sol.traj.x[k] - ref.x[k]).cwiseQuotient(scaling.state).cwiseAbs().maxCoeff();
    const double du =
        (sol.traj.u[k] - ref.u[k]).cwiseQuotient(scaling.control).cwiseAbs().maxCoeff();
    const double dt = std::abs(sol.traj.T - ref.T) / scaling.time;
    CHECK(dx + du + dt <= trust + 1e-6);
  }
  CHECK(sol.traj.T >= sc.t_min - 1e-9);
  CHECK(sol.traj.T <= sc.t_max + 1e-9);
}

TEST_CASE("assemble rejects mismatched discretizations") {
  const Scenario sc = short_mission(8);
  const ScpConfig cfg;
  const Trajectory ref = initial_guess(sc);
  auto disc = discretize_trajectory(ref, sc.quad, ExecPolicy::serial);
  disc.segments.pop_back();
  const auto lin = linearize_nonconvex(ref, sc);
  CHECK_THROWS_AS(assemble(ref, disc, lin, sc, cfg, 1.0, Scaling::from_scenario(sc)), Error);
}

}  // TEST_SUITE
