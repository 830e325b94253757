#pragma once

#include "ctop/quadrotor.hpp"
#include "ctop/types.hpp"

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include <span>
#include <vector>

namespace ctop {

struct IntegratorOptions {
  double rel_tol = 1.0e-10;
  double abs_tol = 1.0e-12;
};

// Exact zero-order-hold discretization of the time-scaled linearized dynamics
// over one segment: x_{k+1} = A x_k + B u_k + F T + rho (+ virtual control).
struct LinearizedSegment {
  Mat12 A;
  Mat12x4 B;
  Vec12 F;
  Vec12 rho;
  Vec12 x_end;  // endpoint of the nonlinear reference flow
};

struct DiscretizedSystem {
  std::vector<LinearizedSegment> segments;
  Trajectory reference;
};

enum class ExecPolicy { serial, parallel };

// Trapezoidal rule on the uniform normalized grid, dtau = 1/(N-1).
double trapz(std::span<const double> values);
std::vector<double> trapz_weights(int n);

// Applies the difference equation of a discretized segment (works for both
// LinearizedSegment and the generic SegmentDiscretization).
template <class Segment, class StateVec, class InputVec>
StateVec propagate(const Segment& seg, const StateVec& xk, const InputVec& uk, double T) {
  return seg.A * xk + seg.B * uk + seg.F * T + seg.rho;
}

namespace detail {

// Augmented segment ODE: reference flow, transition matrix Phi, its inverse
// Psi (co-integrated adjoint, dPsi = -Psi A), and the three convolution
// integrals for the control, time, and residue maps.
template <class Model>
struct SegmentOde {
  static constexpr int nx = Model::nx;
  static constexpr int nu = Model::nu;
  static constexpr int naug = nx * (2 * nx + nu + 3);
  using AugVec = Eigen::Matrix<double, naug, 1>;
  using StateVec = Eigen::Matrix<double, nx, 1>;
  using InputVec = Eigen::Matrix<double, nu, 1>;
  using StateMat = Eigen::Matrix<double, nx, nx>;
  using InputMat = Eigen::Matrix<double, nx, nu>;

  const Model& model;
  InputVec u;
  double T;

  void operator()(const AugVec& v, AugVec& dv, double /*tau*/) const {
    const StateVec x = v.template head<nx>();
    const Eigen::Map<const StateMat> phi(v.data() + nx);
    const Eigen::Map<const StateMat> psi(v.data() + nx + nx * nx);

    const StateVec f = model.f(x, u);
    const StateMat a = T * model.dfdx(x, u);
    const InputMat b = T * model.dfdu(x, u);
    const StateVec residual = T * f - a * x - b * u - f * T;

    dv.template head<nx>() = T * f;
    Eigen::Map<StateMat>(dv.data() + nx) = a * phi;
    Eigen::Map<StateMat>(dv.data() + nx + nx * nx) = -psi * a;
    Eigen::Map<InputMat>(dv.data() + nx + 2 * nx * nx) = psi * b;
    dv.template segment<nx>(nx + 2 * nx * nx + nx * nu) = psi * f;
    dv.template segment<nx>(nx + 2 * nx * nx + nx * nu + nx) = psi * residual;
  }
};

template <class Vec, class Sys>
void integrate_ode(Sys sys, Vec& state, double t0, double t1, const IntegratorOptions& opt) {
  namespace ode = boost::numeric::odeint;
  using stepper_t = ode::runge_kutta_dopri5<Vec, double, Vec, double, ode::vector_space_algebra>;
  try {
    ode::integrate_adaptive(ode::make_controlled(opt.abs_tol, opt.rel_tol, stepper_t()), sys,
                            state, t0, t1, (t1 - t0) / 16.0);
  } catch (const ode::no_progress_error& e) {
    throw Error(ErrorCode::integrator_failure, std::string("adaptive step underflow: ") + e.what());
  } catch (const std::overflow_error& e) {
    throw Error(ErrorCode::integrator_failure, std::string("adaptive step underflow: ") + e.what());
  }
  if (!state.allFinite()) {
    throw Error(ErrorCode::integrator_failure, "integration produced non-finite values");
  }
}

}  // namespace detail

template <class Model>
struct SegmentDiscretization {
  Eigen::Matrix<double, Model::nx, Model::nx> A;
  Eigen::Matrix<double, Model::nx, Model::nu> B;
  Eigen::Matrix<double, Model::nx, 1> F;
  Eigen::Matrix<double, Model::nx, 1> rho;
  Eigen::Matrix<double, Model::nx, 1> x_end;
};

template <class Model>
SegmentDiscretization<Model> discretize_segment(
    const Model& model, const Eigen::Matrix<double, Model::nx, 1>& x0,
    const Eigen::Matrix<double, Model::nu, 1>& u, double T, double dtau,
    const IntegratorOptions& opt = {}) {
  using Ode = detail::SegmentOde<Model>;
  constexpr int nx = Model::nx;
  constexpr int nu = Model::nu;

  typename Ode::AugVec v = Ode::AugVec::Zero();
  v.template head<nx>() = x0;
  Eigen::Map<typename Ode::StateMat>(v.data() + nx).setIdentity();
  Eigen::Map<typename Ode::StateMat>(v.data() + nx + nx * nx).setIdentity();

  detail::integrate_ode(Ode{model, u, T}, v, 0.0, dtau, opt);

  SegmentDiscretization<Model> out;
  out.A = Eigen::Map<typename Ode::StateMat>(v.data() + nx);
  out.B = out.A * Eigen::Map<typename Ode::InputMat>(v.data() + nx + 2 * nx * nx);
  out.F = out.A * v.template segment<nx>(nx + 2 * nx * nx + nx * nu);
  out.rho = out.A * v.template segment<nx>(nx + 2 * nx * nx + nx * nu + nx);
  out.x_end = v.template head<nx>();
  return out;
}

// Quadrotor dynamics wrapped for the segment integrator.
struct QuadrotorModel {
  static constexpr int nx = 12;
  static constexpr int nu = 4;
  QuadrotorParams params;

  Vec12 f(const Vec12& x, const Vec4& u) const { return dynamics_rhs(x, u, params); }
  Mat12 dfdx(const Vec12& x, const Vec4& u) const {
    Mat12 a;
    Mat12x4 b;
    dynamics_jacobians(x, u, params, a, b);
    return a;
  }
  Mat12x4 dfdu(const Vec12& x, const Vec4& u) const {
    Mat12 a;
    Mat12x4 b;
    dynamics_jacobians(x, u, params, a, b);
    return b;
  }
};

// Discretize all N-1 segments of a reference trajectory. The parallel policy
// farms segments out with OpenMP; the serial policy is the reference path the
// tests and benchmark compare against. Both produce identical results.
DiscretizedSystem discretize_trajectory(const Trajectory& ref, const QuadrotorParams& p,
                                        ExecPolicy policy = ExecPolicy::parallel,
                                        const IntegratorOptions& opt = {});

// Nonlinear ZOH flow from x0 under constant u for `duration` seconds.
Vec12 flow_zoh(const QuadrotorParams& p, const Vec12& x0, const Vec4& u, double duration,
               const IntegratorOptions& opt = {});

// Dynamics defects: x_{k+1} minus the nonlinear flow from x_k under u_k.
std::vector<Vec12> dynamics_defects(const Trajectory& traj, const QuadrotorParams& p,
                                    ExecPolicy policy = ExecPolicy::parallel,
                                    const IntegratorOptions& opt = {});

}  // namespace ctop
