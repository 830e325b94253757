#include "ctop/ocp.hpp"
#include "ctop/quadrotor.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ctop;

namespace {

Mat3 elementary_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
Mat3 elementary_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
Mat3 elementary_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0, -a(2), a(1), a(2), 0, -a(0), -a(1), a(0), 0;
  return s;
}

Vec12 random_admissible_state(std::mt19937& rng, const QuadrotorParams& p) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec12 x;
  for (int i = 0; i < 3; ++i) x(sx::pos + i) = 100.0 * unit(rng);
  for (int i = 0; i < 3; ++i) x(sx::vel + i) = 5.0 * unit(rng);
  x(sx::att + 0) = 0.9 * p.max_roll * unit(rng);
  x(sx::att + 1) = 0.9 * p.max_pitch * unit(rng);
  x(sx::att + 2) = M_PI * unit(rng);
  for (int i = 0; i < 3; ++i) x(sx::rate + i) = 1.5 * unit(rng);
  return x;
}

Vec4 random_admissible_control(std::mt19937& rng, const QuadrotorParams& p) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec4 u;
  u(0) = 0.5 * p.max_thrust * (1.0 + unit(rng) * 0.9);
  for (int i = 0; i < 3; ++i) u(1 + i) = 0.9 * p.max_torque(i) * unit(rng);
  return u;
}

}  // namespace

TEST_SUITE("quadrotor") {

TEST_CASE("rotation is identity at zero attitude") {
  CHECK((euler_to_rotation(Vec3::Zero()) - Mat3::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("pure yaw of 90 degrees maps body x to earth y") {
  const Mat3 R = euler_to_rotation(Vec3(0, 0, M_PI / 2));
  const Vec3 ex = R * Vec3::UnitX();
  CHECK(ex(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ex(1) == doctest::Approx(1.0));
  CHECK(ex(2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotation matches composition of elementary rotations") {
  const Vec3 eta(0.1, 0.2, 0.3);
  const Mat3 expect = elementary_z(eta(2)) * elementary_y(eta(1)) * elementary_x(eta(0));
  CHECK((euler_to_rotation(eta) - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rotation orthonormality over random attitudes") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const QuadrotorParams p;
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 eta(p.max_roll * unit(rng), p.max_pitch * unit(rng), M_PI * unit(rng));
    const Mat3 R = euler_to_rotation(eta);
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("euler rate matrix is identity at zero and singular near gimbal lock") {
  CHECK((euler_rate_matrix(Vec3::Zero()) - Mat3::Identity()).norm() == doctest::Approx(0.0));

  // Entries scale as 1/cos(pitch) on the way to the singularity.
  const double w_near = euler_rate_matrix(Vec3(0, 1.4, 0))(2, 2);
  const double w_far = euler_rate_matrix(Vec3(0, 1.0, 0))(2, 2);
  CHECK(w_near == doctest::Approx(1.0 / std::cos(1.4)));
  CHECK(w_near > w_far);

  CHECK_THROWS_AS(euler_rate_matrix(Vec3(0, M_PI / 2 - 1e-10, 0)), Error);
}

TEST_CASE("euler rate map is consistent with rotation kinematics") {
  // Rdot = R skew(omega) checked against a finite difference of R along
  // etadot = W(eta) omega.
  const Vec3 eta(0.3, 0.4, 0.0);
  const Vec3 omega(0.1, 0.2, 0.3);
  const Vec3 etadot = euler_rate_matrix(eta) * omega;

  const double h = 1e-6;
  const Mat3 dR_num =
      (euler_to_rotation(eta + h * etadot) - euler_to_rotation(eta - h * etadot)) / (2.0 * h);
  const Mat3 dR_expect = euler_to_rotation(eta) * skew(omega);
  CHECK((dR_num - dR_expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("hover is an equilibrium") {
  const QuadrotorParams p;  // 3 kg, g = 9.80665 -> hover thrust 29.42 N
  CHECK(p.hover_thrust() == doctest::Approx(29.41995).epsilon(1e-12));
  Vec12 x = Vec12::Zero();
  x.segment<3>(sx::pos) = Vec3(1, 2, 3);
  const Vec12 f = dynamics_rhs(x, p.hover_wrench(), p);
  CHECK(f.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("free fall accelerates at -g") {
  const QuadrotorParams p;
  Vec12 x = Vec12::Zero();
  const Vec12 f = dynamics_rhs(x, Vec4::Zero(), p);
  CHECK(f.segment<3>(sx::vel).isApprox(Vec3(0, 0, -p.gravity)));
  CHECK(f.segment<3>(sx::pos).norm() == 0.0);
  CHECK(f.segment<3>(sx::att).norm() == 0.0);
  CHECK(f.segment<3>(sx::rate).norm() == 0.0);
}

TEST_CASE("pure roll torque divides by the inertia") {
  const QuadrotorParams p;  // J = diag(0.04, 0.04, 0.08)
  Vec12 x = Vec12::Zero();
  const Vec4 u(p.hover_thrust(), 0.04, 0.0, 0.0);
  const Vec12 f = dynamics_rhs(x, u, p);
  CHECK(f.segment<3>(sx::rate).isApprox(Vec3(1.0, 0.0, 0.0)));
}

TEST_CASE("jacobian structure at hover") {
  const QuadrotorParams p;
  Vec12 x = Vec12::Zero();
  Mat12 dfdx;
  Mat12x4 dfdu;
  dynamics_jacobians(x, p.hover_wrench(), p, dfdx, dfdu);

  CHECK((dfdx.block<3, 3>(sx::pos, sx::vel) - Mat3::Identity()).norm() == doctest::Approx(0.0));
  CHECK(dfdu.block<3, 1>(sx::vel, 0).isApprox(Vec3(0, 0, 1.0 / p.mass)));
  const Mat3 jinv = dfdu.block<3, 3>(sx::rate, 1);
  CHECK(jinv.isApprox(Vec3(25.0, 25.0, 12.5).asDiagonal().toDenseMatrix()));
}

TEST_CASE("jacobians match central finite differences") {
  const QuadrotorParams p;
  std::mt19937 rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec12 x = random_admissible_state(rng, p);
    const Vec4 u = random_admissible_control(rng, p);
    Mat12 dfdx;
    Mat12x4 dfdu;
    dynamics_jacobians(x, u, p, dfdx, dfdu);

    for (int j = 0; j < 12; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
      Vec12 xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const Vec12 col = (dynamics_rhs(xp, u, p) - dynamics_rhs(xm, u, p)) / (2.0 * h);
      for (int i = 0; i < 12; ++i) {
        worst = std::max(worst, std::abs(dfdx(i, j) - col(i)) / std::max(1.0, std::abs(col(i))));
      }
    }
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(u(j)));
      Vec4 up = u, um = u;
      up(j) += h;
      um(j) -= h;
      const Vec12 col = (dynamics_rhs(x, up, p) - dynamics_rhs(x, um, p)) / (2.0 * h);
      for (int i = 0; i < 12; ++i) {
        worst = std::max(worst, std::abs(dfdu(i, j) - col(i)) / std::max(1.0, std::abs(col(i))));
      }
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("energy integrand ignores yaw of the state") {
  Trajectory a, b;
  a.T = b.T = 50.0;
  for (int k = 0; k < 5; ++k) {
    Vec12 x = Vec12::Zero();
    const Vec4 u(20.0 + k, 0.1, -0.2, 0.05 * k);
    a.x.push_back(x);
    a.u.push_back(u);
    x(sx::att + 2) = 0.3 * k;  // yawed copy, identical controls
    b.x.push_back(x);
    b.u.push_back(u);
  }
  CHECK(energy_cost(a) == energy_cost(b));
}

}  // TEST_SUITE
