#include "ctop/channel.hpp"

#include "ctop/discretization.hpp"

#include <cmath>

namespace ctop {

void ChannelParams::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::invalid_scenario, "channel." + field + ": " + why);
  };
  if (!(a1 > 0.0)) fail("a1", "must be positive");
  if (!(a2 > 0.0)) fail("a2", "must be positive");
  if (!(reflection > 0.0 && reflection < 1.0)) fail("reflection_attenuation", "must be in (0, 1)");
  if (!(path_loss_exp > 0.0)) fail("path_loss_exponent", "must be positive");
  if (!(snr_b > 0.0)) fail("snr_constant_b", "must be positive");
  if (!(bandwidth > 0.0)) fail("bandwidth_hz", "must be positive");
  if (!gs.allFinite()) fail("ground_station_m", "must be finite");
  if (!(q_min_bits >= 0.0)) fail("q_min_megabytes", "must be nonnegative");
}

double elevation_angle_deg(const Vec3& r_uav, const ChannelParams& cp) {
  const Vec3 d = r_uav - cp.gs;
  const double dist = d.norm();
  if (dist < 1e-9) {
    throw Error(ErrorCode::coincident_position, "elevation angle undefined: UAV at GS position");
  }
  const double s = std::clamp(d(2) / dist, -1.0, 1.0);
  return (180.0 / M_PI) * std::asin(s);
}

double p_dir(double alpha_deg, const ChannelParams& cp) {
  return 1.0 / (1.0 + cp.a1 * std::exp(-cp.a2 * (alpha_deg - cp.a1)));
}

double p_dir_eff(double alpha_deg, const ChannelParams& cp) {
  return cp.reflection + (1.0 - cp.reflection) * p_dir(alpha_deg, cp);
}

namespace {

double separation_checked(const Vec3& r_uav, const ChannelParams& cp) {
  const double dist = (r_uav - cp.gs).norm();
  if (dist < kMinSeparation) {
    throw Error(ErrorCode::coincident_position,
                "UAV-GS separation below " + std::to_string(kMinSeparation) + " m");
  }
  return dist;
}

}  // namespace

double expected_rate(const Vec3& r_uav, const ChannelParams& cp) {
  const double dist = separation_checked(r_uav, cp);
  const double pbar = p_dir_eff(elevation_angle_deg(r_uav, cp), cp);
  const double snr = cp.snr_b * pbar * std::pow(dist, -cp.path_loss_exp);
  return cp.bandwidth * std::log2(1.0 + snr);
}

double throughput(const Trajectory& traj, const ChannelParams& cp) {
  const int n = traj.node_count();
  if (n < 2) throw Error(ErrorCode::dimension_mismatch, "throughput needs at least 2 nodes");
  std::vector<double> rates(n);
  for (int k = 0; k < n; ++k) rates[k] = expected_rate(traj.x[k].segment<3>(sx::pos), cp);
  return traj.T * trapz(rates);
}

Vec3 rate_gradient(const Vec3& r_uav, const ChannelParams& cp) {
  const double dist = separation_checked(r_uav, cp);
  const Vec3 d = r_uav - cp.gs;
  const double alpha = elevation_angle_deg(r_uav, cp);
  const double p = p_dir(alpha, cp);
  const double pbar = cp.reflection + (1.0 - cp.reflection) * p;

  // grad of the elevation angle; zero on the vertical axis where the
  // asin argument hits +-1 (symmetric cone point, rate is stationary there).
  const double su = d(2) / dist;
  Vec3 grad_alpha = Vec3::Zero();
  const double one_minus = 1.0 - su * su;
  if (one_minus > 1e-12) {
    const Vec3 grad_su = Vec3::UnitZ() / dist - d * (d(2) / (dist * dist * dist));
    grad_alpha = (180.0 / M_PI) / std::sqrt(one_minus) * grad_su;
  }

  const double dp_dalpha = cp.a2 * p * (1.0 - p);
  const Vec3 grad_pbar = (1.0 - cp.reflection) * dp_dalpha * grad_alpha;

  const double att = std::pow(dist, -cp.path_loss_exp);
  const double snr = cp.snr_b * pbar * att;
  const Vec3 grad_dist = d / dist;
  const Vec3 grad_snr =
      cp.snr_b * (att * grad_pbar - pbar * cp.path_loss_exp * att / dist * grad_dist);

  return cp.bandwidth / std::log(2.0) / (1.0 + snr) * grad_snr;
}

}  // namespace ctop
