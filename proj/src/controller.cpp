#include "resrl/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace resrl {

void PControllerParams::validate() const {
  if (k_p <= 0.0) throw std::invalid_argument("controller: k_p must be positive");
  if (waypoint_tol <= 0.0) throw std::invalid_argument("controller: waypoint_tol must be positive");
  if (a_max <= 0.0) throw std::invalid_argument("controller: a_max must be positive");
}

PController::PController(const PControllerParams& params) : params_(params) {
  params_.validate();
}

Action PController::act(const Obs& obs) {
  const double gx = obs[0];
  const double gz = obs[1];
  const double goal_x = obs[9];
  const double goal_z = obs[10];
  // Waypoints derived from the observed goal; the last one is the goal itself.
  const double wx[2] = {goal_x, goal_x};
  const double wz[2] = {params_.hover_z, goal_z};
  constexpr int kLast = 1;

  // A waypoint is passed when reached within tolerance or once the gripper
  // is already below its altitude; the sequence only ever descends, and a
  // detoured approach must not leave the controller pulling back up.
  while (waypoint_ < kLast) {
    const double ex = wx[waypoint_] - gx;
    const double ez = wz[waypoint_] - gz;
    const bool reached = std::sqrt(ex * ex + ez * ez) < params_.waypoint_tol;
    const bool below = gz <= wz[waypoint_] + params_.waypoint_tol;
    if (!reached && !below) break;
    ++waypoint_;
  }
  const double ex = wx[waypoint_] - gx;
  const double ez = wz[waypoint_] - gz;
  auto clip = [&](double v) { return std::min(std::max(v, -params_.a_max), params_.a_max); };
  return Action{clip(params_.k_p * ex), clip(params_.k_p * ez)};
}

}  // namespace resrl
