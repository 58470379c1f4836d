#pragma once

#include "resrl/env.hpp"

namespace resrl {

// Hand-designed proportional waypoint controller: hover above the goal, then
// descend straight into it. Reads only the gripper and goal entries of the
// observation.
struct PControllerParams {
  double k_p = 0.05;
  double waypoint_tol = 0.002;
  double hover_z = 0.16;
  double a_max = 0.005;

  void validate() const;
};

class PController {
 public:
  explicit PController(const PControllerParams& params);

  void reset() { waypoint_ = 0; }
  Action act(const Obs& obs);

  int waypoint_index() const { return waypoint_; }

 private:
  PControllerParams params_;
  int waypoint_ = 0;
};

}  // namespace resrl
