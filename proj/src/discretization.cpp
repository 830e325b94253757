#include "ctop/discretization.hpp"

#include <exception>

namespace ctop {

double trapz(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw Error(ErrorCode::dimension_mismatch, "trapz needs at least 2 values");
  const double dtau = 1.0 / (n - 1);
  double acc = 0.0;
  for (int k = 0; k + 1 < n; ++k) acc += values[k] + values[k + 1];
  return 0.5 * dtau * acc;
}

std::vector<double> trapz_weights(int n) {
  if (n < 2) throw Error(ErrorCode::dimension_mismatch, "trapz needs at least 2 values");
  const double dtau = 1.0 / (n - 1);
  std::vector<double> w(n, dtau);
  w.front() = 0.5 * dtau;
  w.back() = 0.5 * dtau;
  return w;
}

namespace {

void check_trajectory(const Trajectory& traj) {
  if (traj.node_count() < 2 || traj.u.size() != traj.x.size()) {
    throw Error(ErrorCode::dimension_mismatch, "trajectory needs N >= 2 matched state/control nodes");
  }
  if (!(traj.T > 0.0)) throw Error(ErrorCode::dimension_mismatch, "trajectory needs T > 0");
}

template <class Body>
void for_each_segment(int count, ExecPolicy policy, Body&& body) {
  std::exception_ptr first_error;
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < count; ++k) {
      try {
        body(k);
      } catch (...) {
#pragma omp critical
        if (!first_error) first_error = std::current_exception();
      }
    }
  } else {
    for (int k = 0; k < count && !first_error; ++k) {
      try {
        body(k);
      } catch (...) {
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

DiscretizedSystem discretize_trajectory(const Trajectory& ref, const QuadrotorParams& p,
                                        ExecPolicy policy, const IntegratorOptions& opt) {
  check_trajectory(ref);
  const int nseg = ref.node_count() - 1;
  const double dtau = ref.dtau();
  const QuadrotorModel model{p};

  DiscretizedSystem sys;
  sys.reference = ref;
  sys.segments.resize(nseg);

  for_each_segment(nseg, policy, [&](int k) {
    const auto seg = discretize_segment(model, ref.x[k], ref.u[k], ref.T, dtau, opt);
    sys.segments[k] = LinearizedSegment{seg.A, seg.B, seg.F, seg.rho, seg.x_end};
  });
  return sys;
}

Vec12 flow_zoh(const QuadrotorParams& p, const Vec12& x0, const Vec4& u, double duration,
               const IntegratorOptions& opt) {
  Vec12 x = x0;
  if (duration == 0.0) return x;
  detail::integrate_ode(
      [&p, &u](const Vec12& s, Vec12& ds, double) { ds = dynamics_rhs(s, u, p); }, x, 0.0,
      duration, opt);
  return x;
}

std::vector<Vec12> dynamics_defects(const Trajectory& traj, const QuadrotorParams& p,
                                    ExecPolicy policy, const IntegratorOptions& opt) {
  check_trajectory(traj);
  const int nseg = traj.node_count() - 1;
  const double dt = traj.T * traj.dtau();

  std::vector<Vec12> defects(nseg);
  for_each_segment(nseg, policy, [&](int k) {
    defects[k] = traj.x[k + 1] - flow_zoh(p, traj.x[k], traj.u[k], dt, opt);
  });
  return defects;
}

}  // namespace ctop
