#include "ctop/subproblem.hpp"

#include <cmath>
#include <vector>

namespace ctop {

Scaling Scaling::from_scenario(const Scenario& sc) {
  Scaling s;
  const Vec3 r0 = sc.x_start.segment<3>(sx::pos);
  const Vec3 rf = sc.x_goal.segment<3>(sx::pos);
  const Vec3 gs = sc.channel.gs;
  const double extent = std::max({(rf - r0).norm(), (gs - r0).norm(), (gs - rf).norm(), 1.0});

  const double s_pos = extent;
  const double s_vel = std::max(1.0, extent / sc.t_guess);
  const double s_ang = std::max(sc.quad.max_roll, sc.quad.max_pitch);
  const double s_rate = 1.0;
  s.state << s_pos, s_pos, s_pos, s_vel, s_vel, s_vel, s_ang, s_ang, s_ang, s_rate, s_rate, s_rate;
  s.control << sc.quad.max_thrust, sc.quad.max_torque(0), sc.quad.max_torque(1),
      sc.quad.max_torque(2);
  s.time = sc.t_guess;
  s.energy = sc.t_guess * sc.quad.hover_thrust() * sc.quad.hover_thrust();
  s.length = s_pos;
  s.qbits = std::max(sc.channel.q_min_bits, 1.0);
  return s;
}

namespace {

using Triplet = Eigen::Triplet<double>;

struct RowBuilder {
  std::vector<Triplet> trips;
  std::vector<double> rhs;

  int add_row(std::initializer_list<std::pair<int, double>> entries, double bound) {
    const int row = static_cast<int>(rhs.size());
    for (const auto& [col, val] : entries) trips.emplace_back(row, col, val);
    rhs.push_back(bound);
    return row;
  }
};

}  // namespace

SubproblemSpec assemble(const Trajectory& ref, const DiscretizedSystem& disc,
                        const ConstraintLinearization& lin, const Scenario& sc,
                        const ScpConfig& cfg, double trust, const Scaling& scaling) {
  const int n = ref.node_count();
  const int nseg = n - 1;
  if (static_cast<int>(disc.segments.size()) != nseg) {
    throw Error(ErrorCode::dimension_mismatch, "assemble: segment count != N-1");
  }
  if (lin.throughput_row && static_cast<int>(lin.throughput_row->grad_pos.size()) != n) {
    throw Error(ErrorCode::dimension_mismatch, "assemble: throughput row node count mismatch");
  }
  if (!(trust >= 0.0)) throw Error(ErrorCode::dimension_mismatch, "assemble: trust must be >= 0");

  SubproblemSpec spec;
  spec.n_nodes = n;
  spec.n_obs = static_cast<int>(sc.obstacles.size());
  spec.has_throughput = lin.throughput_row.has_value();
  spec.scaling = scaling;
  spec.reference = ref;
  spec.lambda = cfg.lambda;
  spec.trust = trust;
  spec.node_weights = trapz_weights(n);

  const Vec12& sx_ = scaling.state;
  const Vec4& su = scaling.control;
  const double st = scaling.time;
  const double ce = scaling.energy;
  const double dtau = ref.dtau();

  // Variable layout.
  spec.off_x = 0;
  spec.off_u = 12 * n;
  spec.off_t = 16 * n;
  spec.off_nup = 16 * n + 1;
  spec.off_num = spec.off_nup + 12 * nseg;
  spec.off_beta = spec.off_num + 12 * nseg;
  spec.off_betaq = spec.off_beta + spec.n_obs * n;
  spec.off_ex = spec.off_betaq + (spec.has_throughput ? 1 : 0);
  spec.off_eu = spec.off_ex + n;
  spec.off_et = spec.off_eu + n;
  const int nv = spec.off_et + 1;

  auto xi = [&](int k, int i) { return spec.off_x + 12 * k + i; };
  auto ui2 = [&](int k, int i) { return spec.off_u + 4 * k + i; };

  // Equalities: exact linearized dynamics with split virtual controls, pinned
  // boundary states, and the last control tied to its neighbor (ZOH never
  // applies the control at the final node).
  std::vector<Triplet> eq_trips;
  Eigen::VectorXd eq_rhs(12 * nseg + 24 + 4);
  for (int k = 0; k < nseg; ++k) {
    const auto& seg = disc.segments[k];
    for (int i = 0; i < 12; ++i) {
      const int row = 12 * k + i;
      eq_trips.emplace_back(row, xi(k + 1, i), 1.0);
      for (int j = 0; j < 12; ++j) {
        const double a = seg.A(i, j) * sx_(j) / sx_(i);
        if (a != 0.0) eq_trips.emplace_back(row, xi(k, j), -a);
      }
      for (int j = 0; j < 4; ++j) {
        const double b = seg.B(i, j) * su(j) / sx_(i);
        if (b != 0.0) eq_trips.emplace_back(row, ui2(k, j), -b);
      }
      const double f = seg.F(i) * st / sx_(i);
      if (f != 0.0) eq_trips.emplace_back(row, spec.off_t, -f);
      eq_trips.emplace_back(row, spec.off_nup + 12 * k + i, -1.0);
      eq_trips.emplace_back(row, spec.off_num + 12 * k + i, 1.0);
      eq_rhs(row) = seg.rho(i) / sx_(i);
    }
  }
  for (int i = 0; i < 12; ++i) {
    const int row0 = 12 * nseg + i;
    eq_trips.emplace_back(row0, xi(0, i), 1.0);
    eq_rhs(row0) = sc.x_start(i) / sx_(i);
    const int row1 = 12 * nseg + 12 + i;
    eq_trips.emplace_back(row1, xi(n - 1, i), 1.0);
    eq_rhs(row1) = sc.x_goal(i) / sx_(i);
  }
  for (int i = 0; i < 4; ++i) {
    const int row = 12 * nseg + 24 + i;
    eq_trips.emplace_back(row, ui2(n - 1, i), 1.0);
    eq_trips.emplace_back(row, ui2(n - 2, i), -1.0);
    eq_rhs(row) = 0.0;
  }

  // Inequalities.
  RowBuilder g;

  for (int k = 0; k < n; ++k) {
    g.add_row({{ui2(k, 0), -1.0}}, 0.0);
    g.add_row({{ui2(k, 0), 1.0}}, sc.quad.max_thrust / su(0));
    for (int i = 1; i < 4; ++i) {
      g.add_row({{ui2(k, i), 1.0}}, sc.quad.max_torque(i - 1) / su(i));
      g.add_row({{ui2(k, i), -1.0}}, sc.quad.max_torque(i - 1) / su(i));
    }
    g.add_row({{xi(k, sx::att + 0), 1.0}}, sc.quad.max_roll / sx_(sx::att + 0));
    g.add_row({{xi(k, sx::att + 0), -1.0}}, sc.quad.max_roll / sx_(sx::att + 0));
    g.add_row({{xi(k, sx::att + 1), 1.0}}, sc.quad.max_pitch / sx_(sx::att + 1));
    g.add_row({{xi(k, sx::att + 1), -1.0}}, sc.quad.max_pitch / sx_(sx::att + 1));
  }

  for (int k = 0; k < 12 * nseg; ++k) {
    g.add_row({{spec.off_nup + k, -1.0}}, 0.0);
    g.add_row({{spec.off_num + k, -1.0}}, 0.0);
  }

  for (const auto& row : lin.obstacle_rows) {
    const int beta = spec.off_beta + row.obstacle * n + row.node;
    g.add_row({{xi(row.node, 0), row.grad_xy(0) * sx_(0) / scaling.length},
               {xi(row.node, 1), row.grad_xy(1) * sx_(1) / scaling.length},
               {beta, -1.0}},
              -row.residue / scaling.length);
  }
  for (int i = 0; i < spec.n_obs * n; ++i) g.add_row({{spec.off_beta + i, -1.0}}, 0.0);

  if (spec.has_throughput) {
    const auto& row = *lin.throughput_row;
    const int r = static_cast<int>(g.rhs.size());
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < 3; ++i) {
        const double c = row.grad_pos[k](i) * sx_(i) / scaling.qbits;
        if (c != 0.0) g.trips.emplace_back(r, xi(k, i), c);
      }
    }
    g.trips.emplace_back(r, spec.off_t, row.grad_T * st / scaling.qbits);
    g.trips.emplace_back(r, spec.off_betaq, -1.0);
    g.rhs.push_back(-row.residue / scaling.qbits);
    g.add_row({{spec.off_betaq, -1.0}}, 0.0);
  }

  // Per-node trust region: inf-norm of the state step plus inf-norm of the
  // control step plus the time step must stay within the radius.
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < 12; ++i) {
      const double r = ref.x[k](i) / sx_(i);
      g.add_row({{xi(k, i), 1.0}, {spec.off_ex + k, -1.0}}, r);
      g.add_row({{xi(k, i), -1.0}, {spec.off_ex + k, -1.0}}, -r);
    }
    for (int i = 0; i < 4; ++i) {
      const double r = ref.u[k](i) / su(i);
      g.add_row({{ui2(k, i), 1.0}, {spec.off_eu + k, -1.0}}, r);
      g.add_row({{ui2(k, i), -1.0}, {spec.off_eu + k, -1.0}}, -r);
    }
    g.add_row({{spec.off_ex + k, 1.0}, {spec.off_eu + k, 1.0}, {spec.off_et, 1.0}}, trust);
  }
  g.add_row({{spec.off_t, 1.0}, {spec.off_et, -1.0}}, ref.T / st);
  g.add_row({{spec.off_t, -1.0}, {spec.off_et, -1.0}}, -ref.T / st);
  g.add_row({{spec.off_t, 1.0}}, sc.t_max / st);
  g.add_row({{spec.off_t, -1.0}}, -sc.t_min / st);

  // Objective: convexified running cost (exact quadratic in u, first order in
  // T, ZOH quadrature) plus exact 1-norm penalties.
  std::vector<Triplet> p_trips;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  double linear_t = 0.0;
  for (int k = 0; k + 1 < n; ++k) {
    for (int i = 0; i < 4; ++i) {
      p_trips.emplace_back(ui2(k, i), ui2(k, i), 2.0 * dtau * ref.T * su(i) * su(i) / ce);
    }
    linear_t += dtau * ref.u[k].squaredNorm();
  }
  q(spec.off_t) = linear_t * st / ce;
  for (int i = 0; i < 12 * nseg; ++i) {
    q(spec.off_nup + i) = cfg.lambda * dtau;
    q(spec.off_num + i) = cfg.lambda * dtau;
  }
  for (const auto& row : lin.obstacle_rows) {
    q(spec.off_beta + row.obstacle * n + row.node) = cfg.lambda * spec.node_weights[row.node];
  }
  if (spec.has_throughput) q(spec.off_betaq) = cfg.lambda;

  spec.qp.P.resize(nv, nv);
  spec.qp.P.setFromTriplets(p_trips.begin(), p_trips.end());
  spec.qp.q = q;
  spec.qp.A.resize(static_cast<int>(eq_rhs.size()), nv);
  spec.qp.A.setFromTriplets(eq_trips.begin(), eq_trips.end());
  spec.qp.b = eq_rhs;
  spec.qp.G.resize(static_cast<int>(g.rhs.size()), nv);
  spec.qp.G.setFromTriplets(g.trips.begin(), g.trips.end());
  spec.qp.h = Eigen::Map<Eigen::VectorXd>(g.rhs.data(), g.rhs.size());

  // Feasible-by-construction hint: the reference itself, with virtual
  // controls absorbing the dynamics defects and buffers the violations.
  Eigen::VectorXd hint = Eigen::VectorXd::Zero(nv);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < 12; ++i) hint(xi(k, i)) = ref.x[k](i) / sx_(i);
    for (int i = 0; i < 4; ++i) hint(ui2(k, i)) = ref.u[k](i) / su(i);
  }
  hint(spec.off_t) = ref.T / st;
  for (int k = 0; k < nseg; ++k) {
    const Vec12 defect = ref.x[k + 1] - disc.segments[k].x_end;
    for (int i = 0; i < 12; ++i) {
      const double d = defect(i) / sx_(i);
      hint(spec.off_nup + 12 * k + i) = std::max(d, 0.0) + 0.1;
      hint(spec.off_num + 12 * k + i) = std::max(-d, 0.0) + 0.1;
    }
  }
  for (const auto& row : lin.obstacle_rows) {
    const double v = evaluate_obstacle_row(row, ref) / scaling.length;
    hint(spec.off_beta + row.obstacle * n + row.node) = std::max(v, 0.0) + 0.1;
  }
  if (spec.has_throughput) {
    const double v = evaluate_throughput_row(*lin.throughput_row, ref) / scaling.qbits;
    hint(spec.off_betaq) = std::max(v, 0.0) + 0.1;
  }
  for (int k = 0; k < n; ++k) {
    hint(spec.off_ex + k) = trust / 6.0;
    hint(spec.off_eu + k) = trust / 6.0;
  }
  hint(spec.off_et) = trust / 6.0;
  spec.start_point = hint;

  return spec;
}

SubproblemSolution solve(const SubproblemSpec& spec) {
  QpSettings settings;
  const QpSolution qp = solve_qp(spec.qp, settings, &spec.start_point);

  SubproblemSolution out;
  out.qp_iterations = qp.iterations;
  switch (qp.status) {
    case QpStatus::optimal:
      out.status = SubproblemStatus::optimal;
      break;
    case QpStatus::near_optimal:
      out.status = SubproblemStatus::near_optimal;
      break;
    case QpStatus::infeasible:
      out.status = SubproblemStatus::infeasible;
      return out;
    case QpStatus::numerical_failure:
      out.status = SubproblemStatus::numerical_failure;
      return out;
  }

  const int n = spec.n_nodes;
  const int nseg = n - 1;
  const double dtau = spec.reference.dtau();

  out.traj.x.resize(n);
  out.traj.u.resize(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < 12; ++i) {
      out.traj.x[k](i) = qp.x(spec.off_x + 12 * k + i) * spec.scaling.state(i);
    }
    for (int i = 0; i < 4; ++i) {
      out.traj.u[k](i) = qp.x(spec.off_u + 4 * k + i) * spec.scaling.control(i);
    }
  }
  out.traj.T = qp.x(spec.off_t) * spec.scaling.time;

  double nu_weighted = 0.0;
  for (int k = 0; k < nseg; ++k) {
    for (int i = 0; i < 12; ++i) {
      const double mag =
          qp.x(spec.off_nup + 12 * k + i) + qp.x(spec.off_num + 12 * k + i);
      out.nu_norm += mag;
      nu_weighted += dtau * mag;
    }
  }
  double nus_weighted = 0.0;
  for (int j = 0; j < spec.n_obs; ++j) {
    for (int k = 0; k < n; ++k) {
      const double beta = qp.x(spec.off_beta + j * n + k);
      out.nus_norm += beta;
      nus_weighted += spec.node_weights[k] * beta;
    }
  }
  if (spec.has_throughput) {
    const double beta = qp.x(spec.off_betaq);
    out.nus_norm += beta;
    nus_weighted += beta;
  }

  // Convexified running cost: exact quadratic in u, first order in T.
  double energy_hat = 0.0;
  for (int k = 0; k + 1 < n; ++k) {
    energy_hat += dtau * (spec.reference.T * out.traj.u[k].squaredNorm() +
                          spec.reference.u[k].squaredNorm() * (out.traj.T - spec.reference.T));
  }
  out.objective_L =
      energy_hat / spec.scaling.energy + spec.lambda * (nu_weighted + nus_weighted);
  return out;
}

}  // namespace ctop
