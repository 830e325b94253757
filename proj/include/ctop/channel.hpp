#pragma once

#include "ctop/types.hpp"

namespace ctop {

// Urban air-to-ground link: sigmoid line-of-sight probability over elevation
// angle, distance power-law gain, Shannon-Hartley rate upper bound.
struct ChannelParams {
  double a1 = 10.0;               // sigmoid offset/shape (degrees)
  double a2 = 0.6;                // sigmoid slope (1/degree)
  double reflection = 0.2;        // zeta, indirect-path attenuation
  double path_loss_exp = 2.3;     // beta
  double snr_b = 60.0;            // b, consolidated SNR constant
  double bandwidth = 1.0e6;       // w, Hz
  Vec3 gs{200.0, 400.0, 0.0};     // ground station, m
  double q_min_bits = 0.0;        // required throughput

  void validate() const;
};

// Hard floor on UAV-GS separation; the gain model diverges at zero range.
inline constexpr double kMinSeparation = 1.0;  // m

double elevation_angle_deg(const Vec3& r_uav, const ChannelParams& cp);

// LoS probability, strictly increasing in elevation.
double p_dir(double alpha_deg, const ChannelParams& cp);

// Effective direct-link probability zeta + (1 - zeta) p_dir, in [zeta, 1).
double p_dir_eff(double alpha_deg, const ChannelParams& cp);

// Expected achievable rate in bits/s at a UAV position.
double expected_rate(const Vec3& r_uav, const ChannelParams& cp);

// Accumulated bits over the mission: T * trapz of node rates.
double throughput(const Trajectory& traj, const ChannelParams& cp);

// d expected_rate / d r_uav, bits/s per meter.
Vec3 rate_gradient(const Vec3& r_uav, const ChannelParams& cp);

}  // namespace ctop
