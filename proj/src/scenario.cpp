#include "ctop/scenario.hpp"

namespace ctop {

void Scenario::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::invalid_scenario, field + ": " + why);
  };
  quad.validate();
  channel.validate();
  if (nodes < 2) fail("mission.nodes", "need at least 2 temporal nodes");
  if (!(t_min > 0.0)) fail("mission.t_min_s", "must be positive");
  if (!(t_min <= t_guess && t_guess <= t_max)) {
    fail("mission.t_guess_s", "require t_min <= t_guess <= t_max");
  }
  if (!x_start.allFinite()) fail("mission.start", "must be finite");
  if (!x_goal.allFinite()) fail("mission.goal", "must be finite");
  if (!state_admissible(x_start, quad)) fail("mission.start", "violates attitude limits");
  if (!state_admissible(x_goal, quad)) fail("mission.goal", "violates attitude limits");
  for (size_t j = 0; j < obstacles.size(); ++j) {
    const auto& ob = obstacles[j];
    const std::string tag = "mission.obstacles[" + std::to_string(j) + "]";
    if (!(ob.safe_radius > 0.0)) fail(tag + ".safe_radius_m", "must be positive");
    if (!ob.center_xy.allFinite()) fail(tag + ".center_xy_m", "must be finite");
    for (const Vec12* endpoint : {&x_start, &x_goal}) {
      const Vec2 p = endpoint->segment<2>(sx::pos);
      if ((p - ob.center_xy).norm() < ob.safe_radius) {
        fail(tag, "boundary state inside safety circle");
      }
    }
  }
}

void ScpConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::invalid_scenario, "scp." + field + ": " + why);
  };
  if (!(lambda > 0.0)) fail("lambda", "must be positive");
  if (!(eps > 0.0)) fail("eps", "must be positive");
  if (iter_max < 1) fail("iter_max", "must be at least 1");
  if (!(0.0 < rho0 && rho0 < rho1 && rho1 < rho2 && rho2 < 1.0)) {
    fail("rho0/rho1/rho2", "require 0 < rho0 < rho1 < rho2 < 1");
  }
  if (!(alpha > 1.0)) fail("alpha", "must exceed 1");
  if (!(trust_min > 0.0 && trust_min <= trust_init && trust_init <= trust_max)) {
    fail("trust_init", "require 0 < trust_min <= trust_init <= trust_max");
  }
  if (stall_rejections < 1) fail("stall_rejections", "must be at least 1");
}

}  // namespace ctop
