#include "resrl/geometry.hpp"

#include <cmath>
#include <limits>

namespace resrl {

double Vec2::norm() const { return std::sqrt(x * x + z * z); }

double polygon_area(const Polygon& p) {
  const std::size_t n = p.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    twice += a.x * b.z - b.x * a.z;
  }
  return 0.5 * twice;
}

Vec2 polygon_centroid(const Polygon& p) {
  const std::size_t n = p.size();
  if (n == 0) return {};
  const double area = polygon_area(p);
  if (std::abs(area) < 1e-18) {
    // Degenerate: fall back to the vertex mean.
    Vec2 m;
    for (const Vec2& v : p) m = m + v;
    return m * (1.0 / static_cast<double>(n));
  }
  double cx = 0.0, cz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    const double cross = a.x * b.z - b.x * a.z;
    cx += (a.x + b.x) * cross;
    cz += (a.z + b.z) * cross;
  }
  const double k = 1.0 / (6.0 * area);
  return {cx * k, cz * k};
}

Vec2 rotate_about(const Vec2& p, const Vec2& pivot, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Vec2 d = p - pivot;
  return {pivot.x + c * d.x - s * d.z, pivot.z + s * d.x + c * d.z};
}

bool point_in_convex(const Vec2& pt, const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double cross = (b.x - a.x) * (pt.z - a.z) - (b.z - a.z) * (pt.x - a.x);
    if (cross < -1e-12) return false;  // right of a CCW edge => outside
  }
  return true;
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon output = subject;
  const std::size_t m = clip.size();
  for (std::size_t i = 0; i < m && !output.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % m];
    // Inside = left of edge a->b for a CCW clip polygon.
    auto side = [&](const Vec2& p) {
      return (b.x - a.x) * (p.z - a.z) - (b.z - a.z) * (p.x - a.x);
    };
    Polygon input;
    input.swap(output);
    const std::size_t n = input.size();
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2& cur = input[j];
      const Vec2& prev = input[(j + n - 1) % n];
      const double sc = side(cur);
      const double sp = side(prev);
      auto intersect = [&]() {
        const double t = sp / (sp - sc);
        return prev + (cur - prev) * t;
      };
      if (sc >= 0.0) {
        if (sp < 0.0) output.push_back(intersect());
        output.push_back(cur);
      } else if (sp >= 0.0) {
        output.push_back(intersect());
      }
    }
  }
  return output;
}

namespace {

void project(const Polygon& p, const Vec2& axis, double* lo, double* hi) {
  *lo = std::numeric_limits<double>::infinity();
  *hi = -std::numeric_limits<double>::infinity();
  for (const Vec2& v : p) {
    const double d = v.dot(axis);
    if (d < *lo) *lo = d;
    if (d > *hi) *hi = d;
  }
}

}  // namespace

Mtv sat_mtv(const Polygon& subject, const Polygon& other) {
  Mtv best;
  best.depth = std::numeric_limits<double>::infinity();
  auto test_axes = [&](const Polygon& poly) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e = poly[(i + 1) % n] - poly[i];
      const double len = e.norm();
      if (len < 1e-15) continue;
      const Vec2 axis{e.z / len, -e.x / len};  // outward normal of a CCW edge
      double alo, ahi, blo, bhi;
      project(subject, axis, &alo, &ahi);
      project(other, axis, &blo, &bhi);
      // Escape distances for moving subject along +axis / -axis. Both must be
      // positive for the projections to overlap; containment is covered.
      const double escape_pos = bhi - alo;
      const double escape_neg = ahi - blo;
      if (escape_pos <= 0.0 || escape_neg <= 0.0) {
        best.overlap = false;
        return false;  // separating axis found
      }
      if (escape_pos < escape_neg) {
        if (escape_pos < best.depth) {
          best.depth = escape_pos;
          best.normal = axis;
        }
      } else if (escape_neg < best.depth) {
        best.depth = escape_neg;
        best.normal = axis * -1.0;
      }
    }
    return true;
  };
  if (!test_axes(subject)) return best;
  if (!test_axes(other)) return best;
  best.overlap = true;
  return best;
}

Polygon make_rect(const Vec2& center, double width, double height) {
  const double hw = 0.5 * width;
  const double hh = 0.5 * height;
  return {{center.x - hw, center.z - hh},
          {center.x + hw, center.z - hh},
          {center.x + hw, center.z + hh},
          {center.x - hw, center.z + hh}};
}

}  // namespace resrl
