#include "ctop/quadrotor.hpp"

#include <cmath>

namespace ctop {

void QuadrotorParams::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::invalid_scenario, "quadrotor." + field + ": " + why);
  };
  if (!(mass > 0.0)) fail("mass_kg", "must be positive");
  if (!(inertia.minCoeff() > 0.0)) fail("inertia_kgm2", "all components must be positive");
  if (!(arm_length > 0.0)) fail("arm_length_m", "must be positive");
  if (!(gravity > 0.0)) fail("gravity_mps2", "must be positive");
  if (!(max_roll > 0.0 && max_roll < M_PI / 2.0)) fail("max_roll_deg", "must be in (0, 90)");
  if (!(max_pitch > 0.0 && max_pitch < M_PI / 2.0)) fail("max_pitch_deg", "must be in (0, 90)");
  if (!(max_thrust > mass * gravity)) fail("max_thrust_n", "must exceed hover thrust m*g");
  if (!(max_torque.minCoeff() > 0.0)) fail("max_torque_nm", "all components must be positive");
}

Mat3 euler_to_rotation(const Vec3& eta) {
  const double cphi = std::cos(eta(0)), sphi = std::sin(eta(0));
  const double cth = std::cos(eta(1)), sth = std::sin(eta(1));
  const double cpsi = std::cos(eta(2)), spsi = std::sin(eta(2));
  Mat3 R;
  R << cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi,
       cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi,
       -sth,       sphi * cth,                      cphi * cth;
  return R;
}

Mat3 euler_rate_matrix(const Vec3& eta) {
  const double cth = std::cos(eta(1));
  if (std::abs(cth) < 1e-9) {
    throw Error(ErrorCode::singular_attitude,
                "euler_rate_matrix: |cos(pitch)| < 1e-9, attitude singular");
  }
  const double cphi = std::cos(eta(0)), sphi = std::sin(eta(0));
  const double tth = std::tan(eta(1));
  Mat3 W;
  W << 1.0, sphi * tth, cphi * tth,
       0.0, cphi,       -sphi,
       0.0, sphi / cth, cphi / cth;
  return W;
}

Vec12 dynamics_rhs(const Vec12& x, const Vec4& u, const QuadrotorParams& p) {
  const Vec3 v = x.segment<3>(sx::vel);
  const Vec3 eta = x.segment<3>(sx::att);
  const Vec3 omega = x.segment<3>(sx::rate);

  const Mat3 R = euler_to_rotation(eta);
  const Mat3 W = euler_rate_matrix(eta);
  const Vec3 J = p.inertia;
  const Vec3 Jw(J(0) * omega(0), J(1) * omega(1), J(2) * omega(2));
  const Vec3 tau = u.tail<3>();

  Vec12 f;
  f.segment<3>(sx::pos) = v;
  f.segment<3>(sx::vel) = -p.gravity * Vec3::UnitZ() + (u(0) / p.mass) * R.col(2);
  f.segment<3>(sx::att) = W * omega;
  f.segment<3>(sx::rate) = (tau - omega.cross(Jw)).cwiseQuotient(J);
  return f;
}

void dynamics_jacobians(const Vec12& x, const Vec4& u, const QuadrotorParams& p,
                        Mat12& dfdx, Mat12x4& dfdu) {
  const Vec3 eta = x.segment<3>(sx::att);
  const Vec3 omega = x.segment<3>(sx::rate);

  const double cphi = std::cos(eta(0)), sphi = std::sin(eta(0));
  const double cth = std::cos(eta(1)), sth = std::sin(eta(1));
  if (std::abs(cth) < 1e-9) {
    throw Error(ErrorCode::singular_attitude,
                "dynamics_jacobians: |cos(pitch)| < 1e-9, attitude singular");
  }
  const double cpsi = std::cos(eta(2)), spsi = std::sin(eta(2));
  const double tth = sth / cth;

  dfdx.setZero();
  dfdu.setZero();

  // d rdot / dv
  dfdx.block<3, 3>(sx::pos, sx::vel).setIdentity();

  // d vdot / d eta: thrust direction is the third rotation column.
  Mat3 dcol3;
  dcol3.col(0) << -sphi * sth * cpsi + cphi * spsi,
                  -sphi * sth * spsi - cphi * cpsi,
                  -sphi * cth;
  dcol3.col(1) << cphi * cth * cpsi,
                  cphi * cth * spsi,
                  -cphi * sth;
  dcol3.col(2) << -cphi * sth * spsi + sphi * cpsi,
                  cphi * sth * cpsi + sphi * spsi,
                  0.0;
  dfdx.block<3, 3>(sx::vel, sx::att) = (u(0) / p.mass) * dcol3;

  // d vdot / d thrust
  const Mat3 R = euler_to_rotation(eta);
  dfdu.block<3, 1>(sx::vel, 0) = R.col(2) / p.mass;

  // d etadot / d eta (W depends on roll and pitch only)
  const double wy = omega(1), wz = omega(2);
  Mat3 detadot;
  detadot.setZero();
  detadot.col(0) << cphi * tth * wy - sphi * tth * wz,
                    -sphi * wy - cphi * wz,
                    (cphi * wy - sphi * wz) / cth;
  const double sec2 = 1.0 / (cth * cth);
  detadot.col(1) << (sphi * wy + cphi * wz) * sec2,
                    0.0,
                    (sphi * wy + cphi * wz) * sth * sec2;
  dfdx.block<3, 3>(sx::att, sx::att) = detadot;

  // d etadot / d omega
  dfdx.block<3, 3>(sx::att, sx::rate) = euler_rate_matrix(eta);

  // d omegadot / d omega = -J^-1 (skew(omega) J - skew(J omega))
  const Vec3 J = p.inertia;
  auto skew = [](const Vec3& a) {
    Mat3 s;
    s << 0, -a(2), a(1), a(2), 0, -a(0), -a(1), a(0), 0;
    return s;
  };
  const Mat3 gyro = skew(omega) * J.asDiagonal().toDenseMatrix() - skew(Vec3(J.cwiseProduct(omega)));
  dfdx.block<3, 3>(sx::rate, sx::rate) = -J.cwiseInverse().asDiagonal().toDenseMatrix() * gyro;

  // d omegadot / d tau = J^-1
  dfdu.block<3, 3>(sx::rate, 1) = J.cwiseInverse().asDiagonal();
}

bool state_admissible(const Vec12& x, const QuadrotorParams& p) {
  if (!x.allFinite()) return false;
  return std::abs(x(sx::att + 0)) <= p.max_roll && std::abs(x(sx::att + 1)) <= p.max_pitch;
}

bool control_admissible(const Vec4& u, const QuadrotorParams& p) {
  if (!u.allFinite()) return false;
  if (u(0) < 0.0 || u(0) > p.max_thrust) return false;
  return (u.tail<3>().cwiseAbs().array() <= p.max_torque.array()).all();
}

}  // namespace ctop
