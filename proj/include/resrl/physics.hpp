#pragma once

#include <cmath>
#include <cstdint>

#include "resrl/geometry.hpp"

namespace resrl {

// Planar (x-z) quasi-static world: a gripper rigidly carrying one block
// descends toward the gap between two standing blocks. The standing blocks
// can slide laterally and tip about a base corner; past the critical tilt
// they topple and stay down.

enum class RotationMode { kUniform, kDiscrete3 };
enum class BlockSide { kLeft, kRight };

struct BlockState {
  double x_pos = 0.0;  // lateral center of the base footprint (m)
  double tilt = 0.0;   // lean about the horizontal axis (rad), +x lean positive
  double yaw = 0.0;    // static rotation about the vertical axis (rad)
  bool toppled = false;
};

struct GripperState {
  double x_pos = 0.0;
  double z_pos = 0.0;
  double contact_force_z = 0.0;  // vertical component of the latest contact reaction (N)
};

struct WorldState {
  GripperState gripper;
  BlockState left_block;
  BlockState right_block;
  int step_count = 0;
};

struct PhysicsParams {
  // Geometry. The standing blocks carry one chamfered top corner on the gap
  // side; the held block is a plain rectangle.
  double block_width = 0.05;
  double block_height = 0.08;
  double corner_chamfer = 0.01;
  double gap_width = 0.048;
  double held_width = 0.03;
  double held_height = 0.10;
  double goal_x = 0.0;
  double goal_z = 0.05;

  // Contact response.
  double friction_threshold = 5.0;   // N; lateral force below this sticks
  double tilt_critical = std::atan(0.625);  // rad; topple latch past this
  double tilt_restore_rate = 0.0002;      // rad/step gravity righting
  double contact_stiffness = 2000.0;      // N per m of penetration depth
  double block_weight = 0.5;              // N
  double tilt_compliance = 0.1;           // rad per N*m of net tipping moment
  double slide_compliance = 5e-4;         // m per N of lateral force past friction

  // Stepping and workspace.
  double dt = 0.05;
  double max_step_displacement = 0.005;
  double penetration_tol = 1e-6;
  double start_x = 0.0;
  double start_z = 0.18;
  double x_min = -0.15;
  double x_max = 0.15;
  double z_max = 0.25;

  double left_nominal_x() const { return -0.5 * (gap_width + block_width); }
  double right_nominal_x() const { return 0.5 * (gap_width + block_width); }

  // Throws std::invalid_argument when a geometric or physical invariant is
  // violated (non-positive lengths, infeasible gap, bad critical tilt).
  void validate() const;
};

// Standing-block outline at its current pose. A tilted block pivots on the
// base corner it leans toward, so that corner stays on the table.
Polygon block_polygon(const BlockState& block, BlockSide side, const PhysicsParams& p);

// Held-block outline centered on the gripper (the grip offset is zero; the
// gripper reference point is the held-block center).
Polygon held_polygon(double center_x, double center_z, const PhysicsParams& p);

struct ContactResult {
  double held_x = 0.0;
  double held_z = 0.0;
  BlockState block;
  Vec2 force;  // reaction on the held block
};

// One quasi-static pair resolution: penetration force along the minimum
// translation normal, Coulomb slide of the block when the lateral component
// exceeds friction, tilt change from the net moment about the base pivot
// (clamped so contact cannot rotate a block past upright), then the held
// block is pushed out of the remaining overlap.
ContactResult resolve_contact(double held_x, double held_z, const BlockState& block,
                              BlockSide side, const PhysicsParams& p);

// Sample a fresh world: gripper at the start pose with the held block
// attached, standing blocks at nominal placement with independently drawn
// tilts. Identical seeds give identical worlds. Throws when rotation_range
// would start a block past the critical tilt.
WorldState reset_world(std::uint64_t rng_seed, double rotation_range, RotationMode mode,
                       const PhysicsParams& p);

// Advance one step: command components are clipped per axis, contacts are
// resolved, sub-critical tilts relax toward upright, topple flags latch.
WorldState step_world(const WorldState& world, double dx, double dz, const PhysicsParams& p);

// Penetration depth of the held block against one standing block (0 when separated).
double penetration_depth(double held_x, double held_z, const BlockState& block,
                         BlockSide side, const PhysicsParams& p);

bool is_success(const WorldState& world, const PhysicsParams& p, double pos_tol,
                double tilt_tol);

}  // namespace resrl
