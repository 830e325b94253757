#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ctop {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat12x4 = Eigen::Matrix<double, 12, 4>;

// Layout of a state vector: [position, velocity, euler angles, body rates].
namespace sx {
inline constexpr int pos = 0;
inline constexpr int vel = 3;
inline constexpr int att = 6;
inline constexpr int rate = 9;
}  // namespace sx

enum class ErrorCode {
  singular_attitude,
  coincident_position,
  degenerate_reference,
  invalid_scenario,
  integrator_failure,
  division_guard,
  dimension_mismatch,
  io_error,
  parse_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// N node states/controls on the uniform normalized grid tau_k = k/(N-1),
// plus the mission time that maps tau to seconds.
struct Trajectory {
  std::vector<Vec12> x;
  std::vector<Vec4> u;
  double T = 0.0;

  int node_count() const { return static_cast<int>(x.size()); }
  double dtau() const { return 1.0 / (node_count() - 1); }
  double tau(int k) const { return static_cast<double>(k) * dtau(); }
};

}  // namespace ctop
