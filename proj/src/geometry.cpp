#include "otadapt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otadapt/error.hpp"

namespace otadapt {

namespace {
const double pi = std::acos(-1.0);

// Wrap angle into [lo, lo + 2*pi).
double wrap_from(double theta, double lo) {
  while (theta < lo) theta += 2.0 * pi;
  while (theta >= lo + 2.0 * pi) theta -= 2.0 * pi;
  return theta;
}
}  // namespace

double Segment::c(double x, double y) const {
  if (kind == Kind::line) return ax * x + ay * y + b;
  return orient * (std::hypot(x - cx, y - cy) - radius);
}

std::array<double, 2> Segment::grad_c(double x, double y) const {
  if (kind == Kind::line) return {ax, ay};
  const double d = std::hypot(x - cx, y - cy);
  if (d < 1e-300) return {static_cast<double>(orient), 0.0};
  return {orient * (x - cx) / d, orient * (y - cy) / d};
}

double Segment::param(double x, double y) const {
  if (kind == Kind::line) {
    const double dx = p1[0] - p0[0], dy = p1[1] - p0[1];
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return 0.0;
    return ((x - p0[0]) * dx + (y - p0[1]) * dy) / len2;
  }
  if (full_circle) return 0.5;
  const double span = theta1 - theta0;
  double theta = std::atan2(y - cy, x - cx);
  // Place theta in the window centered on the arc so excursions past either
  // endpoint show up as t < 0 or t > 1.
  const double mid = theta0 + 0.5 * span;
  theta = wrap_from(theta, mid - pi);
  return (theta - theta0) / span;
}

std::array<double, 2> Segment::point_at(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  if (kind == Kind::line)
    return {p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])};
  const double theta = full_circle ? t * 2.0 * pi : theta0 + t * (theta1 - theta0);
  return {cx + radius * std::cos(theta), cy + radius * std::sin(theta)};
}

std::array<double, 2> Segment::project(double x, double y) const {
  if (kind == Kind::circle && full_circle) {
    const double d = std::hypot(x - cx, y - cy);
    if (d < 1e-300) return {cx + radius, cy};
    return {cx + radius * (x - cx) / d, cy + radius * (y - cy) / d};
  }
  return point_at(param(x, y));
}

double Segment::distance(double x, double y) const {
  const auto p = project(x, y);
  return std::hypot(x - p[0], y - p[1]);
}

Segment Segment::line(std::array<double, 2> from, std::array<double, 2> to,
                      bool wall) {
  Segment s;
  s.kind = Kind::line;
  s.p0 = from;
  s.p1 = to;
  const double dx = to[0] - from[0], dy = to[1] - from[1];
  const double len = std::hypot(dx, dy);
  if (len == 0.0) throw Error("Segment::line: zero-length segment");
  // Normal for a CCW-traversed boundary points out of the domain.
  s.ax = dy / len;
  s.ay = -dx / len;
  s.b = -(s.ax * from[0] + s.ay * from[1]);
  s.wall = wall;
  return s;
}

Segment Segment::circle(double cx, double cy, double r, int orient, bool wall) {
  Segment s;
  s.kind = Kind::circle;
  s.cx = cx;
  s.cy = cy;
  s.radius = r;
  s.orient = orient;
  s.full_circle = true;
  s.wall = wall;
  return s;
}

Segment Segment::arc(double cx, double cy, double r, double theta0, double theta1,
                     int orient, bool wall) {
  Segment s = circle(cx, cy, r, orient, wall);
  s.theta0 = theta0;
  s.theta1 = theta1;
  s.full_circle = false;
  s.p0 = s.point_at(0.0);
  s.p1 = s.point_at(1.0);
  return s;
}

BoundaryGeometry::BoundaryGeometry(std::vector<Segment> segments,
                                   std::vector<Corner> corners)
    : segments_(std::move(segments)), corners_(std::move(corners)) {
  for (const auto& corner : corners_) {
    if (corner.seg_a < 0 || corner.seg_a >= segment_count() || corner.seg_b < 0 ||
        corner.seg_b >= segment_count())
      throw Error("BoundaryGeometry: corner references unknown segment");
    for (int seg : {corner.seg_a, corner.seg_b}) {
      const double cval = segments_[seg].c(corner.x, corner.y);
      if (std::abs(cval) > 1e-10)
        throw Error("BoundaryGeometry: corner is not on segment " +
                    std::to_string(seg) + " (|c| = " + std::to_string(cval) + ")");
    }
  }
}

int BoundaryGeometry::neighbor(int seg, bool end) const {
  const auto endpoint = end ? segments_[seg].p1 : segments_[seg].p0;
  for (const auto& corner : corners_) {
    if (corner.seg_a != seg && corner.seg_b != seg) continue;
    if (std::hypot(corner.x - endpoint[0], corner.y - endpoint[1]) > 1e-9) continue;
    return corner.seg_a == seg ? corner.seg_b : corner.seg_a;
  }
  return -1;
}

int BoundaryGeometry::slide(double x, double y, int current) const {
  int seg = current;
  for (int hop = 0; hop < segment_count(); ++hop) {
    const double t = segments_[seg].param(x, y);
    if (t >= 0.0 && t <= 1.0) return seg;
    const int next = neighbor(seg, t > 1.0);
    if (next < 0 || next == seg) return seg;
    seg = next;
  }
  return nearest_segment(x, y);
}

int BoundaryGeometry::nearest_segment(double x, double y) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (int i = 0; i < segment_count(); ++i) {
    const double d = segments_[i].distance(x, y);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<int> BoundaryGeometry::wall_segments() const {
  std::vector<int> out;
  for (int i = 0; i < segment_count(); ++i)
    if (segments_[i].wall) out.push_back(i);
  return out;
}

BoundaryGeometry BoundaryGeometry::rectangle(double x0, double y0, double x1,
                                             double y1) {
  return polygon({{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}});
}

BoundaryGeometry BoundaryGeometry::polygon(
    const std::vector<std::array<double, 2>>& verts) {
  const int n = static_cast<int>(verts.size());
  if (n < 3) throw Error("BoundaryGeometry::polygon: need at least 3 vertices");
  std::vector<Segment> segments;
  std::vector<Corner> corners;
  for (int i = 0; i < n; ++i)
    segments.push_back(Segment::line(verts[i], verts[(i + 1) % n]));
  for (int i = 0; i < n; ++i)
    corners.push_back({verts[i][0], verts[i][1], (i + n - 1) % n, i});
  return BoundaryGeometry(std::move(segments), std::move(corners));
}

BoundaryGeometry BoundaryGeometry::annulus(double r0, double r1) {
  std::vector<Segment> segments;
  segments.push_back(Segment::circle(0.0, 0.0, r0, -1));
  segments.push_back(Segment::circle(0.0, 0.0, r1, +1));
  return BoundaryGeometry(std::move(segments), {});
}

BoundaryGeometry BoundaryGeometry::double_ramp(double x1, double x2, double x3,
                                               double height, double angle1_deg,
                                               double angle2_deg) {
  const double y2 = (x2 - x1) * std::tan(angle1_deg * pi / 180.0);
  const double y3 = y2 + (x3 - x2) * std::tan(angle2_deg * pi / 180.0);
  if (y3 >= height)
    throw Error("double_ramp: ramps reach the top boundary");
  return polygon({{{0.0, 0.0},
                   {x1, 0.0},
                   {x2, y2},
                   {x3, y3},
                   {x3, height},
                   {0.0, height}}});
}

}  // namespace otadapt
