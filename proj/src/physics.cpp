#include "resrl/physics.hpp"

#include <algorithm>
#include <stdexcept>

#include "resrl/rng.hpp"

namespace resrl {

namespace {

constexpr int kMaxContactIters = 16;
constexpr double kPushSlack = 1e-9;
constexpr double kMaxTiltStep = 0.08;  // rad per resolution, keeps responses stable

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

Vec2 base_pivot(const BlockState& b, const PhysicsParams& p, int lean_sign) {
  const double half = 0.5 * p.block_width;
  return {b.x_pos + (lean_sign > 0 ? half : -half), 0.0};
}

// Center of mass of the block at its current pose. The chamfer is treated as
// a massless cut so the balance angle is exactly atan(width/height).
Vec2 block_com(const BlockState& b, const PhysicsParams& p) {
  const Vec2 upright{b.x_pos, 0.5 * p.block_height};
  if (b.tilt == 0.0) return upright;
  return rotate_about(upright, base_pivot(b, p, b.tilt > 0 ? 1 : -1), -b.tilt);
}

// Torque from force f applied at point pt, taken about pivot q, measured in
// the direction that increases lean_sign * tilt.
double tip_torque(const Vec2& f, const Vec2& pt, const Vec2& q, int lean_sign) {
  const Vec2 d = pt - q;
  return lean_sign * (d.z * f.x - d.x * f.z);
}

void clamp_to_workspace(double* x, double* z, const PhysicsParams& p) {
  *x = clamp(*x, p.x_min, p.x_max);
  *z = clamp(*z, 0.5 * p.held_height, p.z_max);  // table at z = 0
}

double worst_penetration(double hx, double hz, const WorldState& w, const PhysicsParams& p) {
  return std::max(penetration_depth(hx, hz, w.left_block, BlockSide::kLeft, p),
                  penetration_depth(hx, hz, w.right_block, BlockSide::kRight, p));
}

}  // namespace

void PhysicsParams::validate() const {
  auto positive = [](double v) { return v > 0.0; };
  if (!positive(block_width) || !positive(block_height) || !positive(gap_width) ||
      !positive(held_width) || !positive(held_height) || corner_chamfer < 0.0) {
    throw std::invalid_argument("physics: lengths must be positive");
  }
  if (corner_chamfer >= std::min(block_width, block_height)) {
    throw std::invalid_argument("physics: chamfer larger than the block");
  }
  if (gap_width <= held_width) {
    throw std::invalid_argument("physics: gap narrower than the held block");
  }
  if (!(tilt_critical > 0.0) || !(tilt_critical < 1.5707963267948966)) {
    throw std::invalid_argument("physics: tilt_critical outside (0, pi/2)");
  }
  if (!positive(max_step_displacement) || !positive(contact_stiffness) ||
      !positive(block_weight) || tilt_restore_rate < 0.0 || friction_threshold < 0.0 ||
      tilt_compliance < 0.0 || slide_compliance < 0.0 || penetration_tol <= 0.0) {
    throw std::invalid_argument("physics: bad contact parameters");
  }
  if (x_min >= x_max || z_max <= held_height) {
    throw std::invalid_argument("physics: degenerate workspace");
  }
}

Polygon block_polygon(const BlockState& b, BlockSide side, const PhysicsParams& p) {
  const double w = p.block_width;
  const double h = p.block_height;
  const double c = p.corner_chamfer;
  const double x0 = b.x_pos - 0.5 * w;
  const double x1 = b.x_pos + 0.5 * w;
  Polygon poly;
  if (side == BlockSide::kLeft) {
    // Chamfer on the top-right corner (facing the gap).
    poly = {{x0, 0.0}, {x1, 0.0}, {x1, h - c}, {x1 - c, h}, {x0, h}};
  } else {
    poly = {{x0, 0.0}, {x1, 0.0}, {x1, h}, {x0 + c, h}, {x0, h - c}};
  }
  if (b.tilt != 0.0) {
    const Vec2 pivot = base_pivot(b, p, b.tilt > 0 ? 1 : -1);
    for (Vec2& v : poly) v = rotate_about(v, pivot, -b.tilt);
  }
  return poly;
}

Polygon held_polygon(double center_x, double center_z, const PhysicsParams& p) {
  return make_rect({center_x, center_z}, p.held_width, p.held_height);
}

double penetration_depth(double held_x, double held_z, const BlockState& block,
                         BlockSide side, const PhysicsParams& p) {
  const Mtv mtv = sat_mtv(held_polygon(held_x, held_z, p), block_polygon(block, side, p));
  return mtv.overlap ? mtv.depth : 0.0;
}

ContactResult resolve_contact(double held_x, double held_z, const BlockState& block,
                              BlockSide side, const PhysicsParams& p) {
  ContactResult res{held_x, held_z, block, {0.0, 0.0}};
  const Polygon held = held_polygon(held_x, held_z, p);
  Polygon bpoly = block_polygon(block, side, p);
  const Mtv mtv = sat_mtv(held, bpoly);
  if (!mtv.overlap || mtv.depth <= 0.0) return res;

  const Polygon overlap = clip_convex(held, bpoly);
  Vec2 contact;
  if (overlap.size() >= 3 && std::abs(polygon_area(overlap)) > 1e-16) {
    contact = polygon_centroid(overlap);
  } else {
    contact = (polygon_centroid(held) + polygon_centroid(bpoly)) * 0.5;
  }

  const double magnitude = p.contact_stiffness * mtv.depth;
  const Vec2 force_on_held = mtv.normal * magnitude;
  const Vec2 force_on_block = force_on_held * -1.0;
  res.force = force_on_held;

  if (!res.block.toppled) {
    // Coulomb slide: lateral force beyond the stiction threshold moves the block.
    const double lateral = force_on_block.x;
    const double excess = std::abs(lateral) - p.friction_threshold;
    if (excess > 0.0) {
      const double slide = std::min(p.slide_compliance * excess, p.max_step_displacement);
      res.block.x_pos += (lateral > 0.0 ? slide : -slide);
    }

    // Tip about the base corner the block currently leans on. An upright
    // block picks the pivot that the contact moment actually tips it about.
    int s = res.block.tilt > 0.0 ? 1 : (res.block.tilt < 0.0 ? -1 : 0);
    if (s == 0) {
      for (int trial : {1, -1}) {
        const Vec2 q = base_pivot(res.block, p, trial);
        const double tc = tip_torque(force_on_block, contact, q, trial);
        const double tg = trial * p.block_weight * (block_com(res.block, p).x - q.x);
        if (tc + tg > 0.0) {
          s = trial;
          break;
        }
      }
    }
    if (s != 0) {
      const Vec2 q = base_pivot(res.block, p, s);
      const double tc = tip_torque(force_on_block, contact, q, s);
      const double tg = s * p.block_weight * (block_com(res.block, p).x - q.x);
      const double dtilt = clamp(p.tilt_compliance * (tc + tg), -kMaxTiltStep, kMaxTiltStep);
      double tilt = res.block.tilt + s * dtilt;
      // Contact can right a leaning block but never rotate it past upright.
      if (s > 0) tilt = std::max(tilt, 0.0);
      if (s < 0) tilt = std::min(tilt, 0.0);
      res.block.tilt = clamp(tilt, -1.5707963267948966, 1.5707963267948966);
      if (std::abs(res.block.tilt) > p.tilt_critical) res.block.toppled = true;
    }
  }

  // Push the held block out of whatever overlap remains after the block moved.
  bpoly = block_polygon(res.block, side, p);
  const Mtv after = sat_mtv(held, bpoly);
  if (after.overlap && after.depth > 0.0) {
    res.held_x += after.normal.x * (after.depth + kPushSlack);
    res.held_z += after.normal.z * (after.depth + kPushSlack);
  }
  return res;
}

WorldState reset_world(std::uint64_t rng_seed, double rotation_range, RotationMode mode,
                       const PhysicsParams& p) {
  p.validate();
  if (rotation_range < 0.0) {
    throw std::invalid_argument("reset_world: rotation_range must be >= 0");
  }
  if (rotation_range >= p.tilt_critical) {
    throw std::invalid_argument("reset_world: rotation_range would start blocks toppled");
  }
  Rng rng(rng_seed);
  auto draw_tilt = [&]() {
    if (rotation_range == 0.0) return 0.0;
    if (mode == RotationMode::kUniform) return rng.uniform(-rotation_range, rotation_range);
    return (static_cast<double>(rng.uniform_int(0, 2)) - 1.0) * rotation_range;
  };
  WorldState w;
  w.left_block.x_pos = p.left_nominal_x();
  w.left_block.tilt = draw_tilt();
  w.right_block.x_pos = p.right_nominal_x();
  w.right_block.tilt = draw_tilt();
  w.gripper.x_pos = p.start_x;
  w.gripper.z_pos = p.start_z;
  return w;
}

WorldState step_world(const WorldState& world, double dx, double dz, const PhysicsParams& p) {
  WorldState w = world;
  const double lim = p.max_step_displacement;
  dx = clamp(dx, -lim, lim);
  dz = clamp(dz, -lim, lim);

  // Latch any tilt already past critical, then apply gravity righting. The
  // righting runs before the contact pass so any overlap a restoring rotation
  // creates is resolved below, keeping the post-step state clean.
  for (BlockState* b : {&w.left_block, &w.right_block}) {
    if (!b->toppled && std::abs(b->tilt) > p.tilt_critical) b->toppled = true;
    if (b->toppled) continue;
    const double mag = std::abs(b->tilt);
    const double relaxed = std::max(0.0, mag - p.tilt_restore_rate);
    b->tilt = b->tilt >= 0.0 ? relaxed : -relaxed;
  }

  const double pre_x = w.gripper.x_pos;
  const double pre_z = w.gripper.z_pos;
  double hx = pre_x + dx;
  double hz = pre_z + dz;
  const double z_floor = 0.5 * p.held_height;
  double table_force = (hz < z_floor) ? p.contact_stiffness * (z_floor - hz) : 0.0;
  clamp_to_workspace(&hx, &hz, p);

  Vec2 total_force{0.0, table_force};
  for (int iter = 0; iter < kMaxContactIters; ++iter) {
    for (BlockSide side : {BlockSide::kLeft, BlockSide::kRight}) {
      BlockState& b = side == BlockSide::kLeft ? w.left_block : w.right_block;
      const ContactResult res = resolve_contact(hx, hz, b, side, p);
      hx = res.held_x;
      hz = res.held_z;
      b = res.block;
      total_force = total_force + res.force;
    }
    if (hz < z_floor) total_force.z += p.contact_stiffness * (z_floor - hz);
    clamp_to_workspace(&hx, &hz, p);
    if (worst_penetration(hx, hz, w, p) <= p.penetration_tol) break;
  }

  // The gripper cannot move farther than one commanded step per axis. If the
  // contact corrections ask for more (a jam), the held block instead stops
  // along its commanded path at the deepest pose that stays penetration-free.
  double ddx = hx - pre_x;
  double ddz = hz - pre_z;
  const bool excess = std::abs(ddx) > lim || std::abs(ddz) > lim;
  if (excess || worst_penetration(hx, hz, w, p) > p.penetration_tol) {
    const double tx = pre_x + clamp(ddx, -lim, lim);
    const double tz = pre_z + clamp(ddz, -lim, lim);
    auto depth_at = [&](double t) {
      double qx = pre_x + t * (tx - pre_x);
      double qz = pre_z + t * (tz - pre_z);
      clamp_to_workspace(&qx, &qz, p);
      return worst_penetration(qx, qz, w, p);
    };
    double t_ok = -1.0;
    if (depth_at(1.0) <= p.penetration_tol) {
      t_ok = 1.0;
    } else {
      double lo = 0.0, hi = 1.0;
      if (depth_at(0.0) <= p.penetration_tol) {
        for (int i = 0; i < 50; ++i) {
          const double mid = 0.5 * (lo + hi);
          (depth_at(mid) <= p.penetration_tol ? lo : hi) = mid;
        }
        t_ok = lo;
      }
    }
    double t = t_ok;
    if (t < 0.0) {
      // Even the pre-step pose overlaps the moved blocks; take the least bad
      // pose along the path.
      t = 0.0;
      double best = depth_at(0.0);
      for (int i = 1; i <= 8; ++i) {
        const double cand = i / 8.0;
        const double d = depth_at(cand);
        if (d < best) {
          best = d;
          t = cand;
        }
      }
    }
    hx = pre_x + t * (tx - pre_x);
    hz = pre_z + t * (tz - pre_z);
    clamp_to_workspace(&hx, &hz, p);
  }

  w.gripper.x_pos = hx;
  w.gripper.z_pos = hz;
  w.gripper.contact_force_z = total_force.z;

  // Latch topple on the first step past the critical tilt.
  for (BlockState* b : {&w.left_block, &w.right_block}) {
    if (!b->toppled && std::abs(b->tilt) > p.tilt_critical) b->toppled = true;
  }

  w.step_count = world.step_count + 1;
  return w;
}

bool is_success(const WorldState& world, const PhysicsParams& p, double pos_tol,
                double tilt_tol) {
  const double dx = world.gripper.x_pos - p.goal_x;
  const double dz = world.gripper.z_pos - p.goal_z;
  if (std::sqrt(dx * dx + dz * dz) >= pos_tol) return false;
  const double nominal[2] = {p.left_nominal_x(), p.right_nominal_x()};
  const BlockState* blocks[2] = {&world.left_block, &world.right_block};
  for (int i = 0; i < 2; ++i) {
    if (blocks[i]->toppled) return false;
    if (std::abs(blocks[i]->tilt) >= tilt_tol) return false;
    if (std::abs(blocks[i]->x_pos - nominal[i]) >= pos_tol) return false;
  }
  return true;
}

}  // namespace resrl
