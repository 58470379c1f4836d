#pragma once

#include <vector>

namespace resrl {

// Planar geometry in the x-z plane (x lateral, z up).
struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, z + o.z}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, z - o.z}; }
  Vec2 operator*(double s) const { return {x * s, z * s}; }
  double dot(const Vec2& o) const { return x * o.x + z * o.z; }
  double norm() const;
};

// Convex polygon, vertices in counter-clockwise order.
using Polygon = std::vector<Vec2>;

double polygon_area(const Polygon& p);
Vec2 polygon_centroid(const Polygon& p);

// Rotate point p about pivot by angle radians (counter-clockwise positive).
Vec2 rotate_about(const Vec2& p, const Vec2& pivot, double angle);

bool point_in_convex(const Vec2& pt, const Polygon& poly);

// Sutherland-Hodgman intersection of two convex polygons. Result may be
// empty; may contain degenerate (near-zero-area) slivers.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

// Minimum translation vector separating `subject` from `other`, from the
// separating-axis test over both polygons' edge normals. When overlap is
// true, translating subject by normal * depth separates the two shapes.
struct Mtv {
  bool overlap = false;
  Vec2 normal;  // unit, points from `other` toward `subject`
  double depth = 0.0;
};
Mtv sat_mtv(const Polygon& subject, const Polygon& other);

Polygon make_rect(const Vec2& center, double width, double height);

}  // namespace resrl
