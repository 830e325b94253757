#pragma once

#include "ctop/types.hpp"

namespace ctop {

struct QuadrotorParams {
  double mass = 3.0;                       // kg
  Vec3 inertia{0.04, 0.04, 0.08};          // principal moments, kg m^2
  double arm_length = 0.3;                 // m
  double gravity = 9.80665;                // m/s^2
  double max_roll = 35.0 * M_PI / 180.0;   // rad
  double max_pitch = 35.0 * M_PI / 180.0;  // rad
  double max_thrust = 2.5 * 3.0 * 9.80665; // N, total wrench bound
  Vec3 max_torque{1.0, 1.0, 1.0};          // N m per body axis

  double hover_thrust() const { return mass * gravity; }
  Vec4 hover_wrench() const { return Vec4(hover_thrust(), 0.0, 0.0, 0.0); }

  // Throws invalid_scenario naming the offending field.
  void validate() const;
};

// Body-to-Earth rotation matrix, Z-Y-X (yaw-pitch-roll) convention.
Mat3 euler_to_rotation(const Vec3& eta);

// W(eta) with etadot = W(eta) * omega. Throws singular_attitude when
// |cos(pitch)| < 1e-9 (gimbal lock).
Mat3 euler_rate_matrix(const Vec3& eta);

// Rigid-body equations of motion. u = [thrust, torque_x, torque_y, torque_z],
// thrust acting along +body z.
Vec12 dynamics_rhs(const Vec12& x, const Vec4& u, const QuadrotorParams& p);

// Closed-form dfdx (12x12) and dfdu (12x4) of dynamics_rhs.
void dynamics_jacobians(const Vec12& x, const Vec4& u, const QuadrotorParams& p,
                        Mat12& dfdx, Mat12x4& dfdu);

// Attitude and control admissibility against the configured limits.
bool state_admissible(const Vec12& x, const QuadrotorParams& p);
bool control_admissible(const Vec4& u, const QuadrotorParams& p);

}  // namespace ctop
