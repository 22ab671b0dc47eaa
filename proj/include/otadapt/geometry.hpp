#pragma once

#include <array>
#include <string>
#include <vector>

namespace otadapt {

/// One boundary segment of the target domain, either a straight line with
/// c(x) = a.x + b (|a| = 1) or a circular arc with c(x) = sgn * (|x-c| - r).
/// The zero level set of c contains the segment; endpoints bound the active
/// part used for sliding.
struct Segment {
  enum class Kind { line, circle };
  Kind kind = Kind::line;

  // line data
  double ax = 0.0, ay = 0.0, b = 0.0;
  std::array<double, 2> p0{0.0, 0.0}, p1{0.0, 0.0};

  // circle data
  double cx = 0.0, cy = 0.0, radius = 1.0;
  int orient = 1;
  double theta0 = 0.0, theta1 = 0.0;  ///< arc range; equal values mean full circle
  bool full_circle = false;

  bool wall = false;  ///< wall boundary for the eta equation's Dirichlet side

  double c(double x, double y) const;
  std::array<double, 2> grad_c(double x, double y) const;

  /// Parameter of the point along the segment, 0 at the start, 1 at the end;
  /// values outside [0,1] mean the point has left the segment's bounds.
  double param(double x, double y) const;
  /// Point on the segment curve at clamped parameter t.
  std::array<double, 2> point_at(double t) const;
  /// Closest point on the bounded segment.
  std::array<double, 2> project(double x, double y) const;
  double distance(double x, double y) const;

  static Segment line(std::array<double, 2> from, std::array<double, 2> to,
                      bool wall = false);
  static Segment circle(double cx, double cy, double r, int orient,
                        bool wall = false);
  static Segment arc(double cx, double cy, double r, double theta0, double theta1,
                     int orient, bool wall = false);
};

/// Corner point where exactly two segments meet.
struct Corner {
  double x = 0.0, y = 0.0;
  int seg_a = -1, seg_b = -1;
};

/// Boundary description of the target domain: segments plus their corner
/// adjacency. Supplied by configuration, never inferred from the mesh.
class BoundaryGeometry {
 public:
  BoundaryGeometry() = default;
  BoundaryGeometry(std::vector<Segment> segments, std::vector<Corner> corners);

  int segment_count() const { return static_cast<int>(segments_.size()); }
  const Segment& segment(int i) const { return segments_[i]; }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<Corner>& corners() const { return corners_; }

  /// Active segment for a trace point currently assigned to `current`:
  /// transitions across corners while the point is out of parametric bounds.
  int slide(double x, double y, int current) const;

  /// Segment adjacent to `seg` across the corner at its start (end = false)
  /// or end (end = true); -1 when there is none.
  int neighbor(int seg, bool end) const;

  /// Closest segment by projection distance.
  int nearest_segment(double x, double y) const;

  std::vector<int> wall_segments() const;

  // Common domains.
  static BoundaryGeometry rectangle(double x0, double y0, double x1, double y1);
  /// CCW polygon; one segment per edge, a corner at every vertex.
  static BoundaryGeometry polygon(const std::vector<std::array<double, 2>>& verts);
  static BoundaryGeometry annulus(double r0, double r1);
  /// Flat inflow section, then two ramps at the given incline angles, closed
  /// by outflow, top and inflow segments. Segments 0..2 are the bottom chain.
  static BoundaryGeometry double_ramp(double x1, double x2, double x3, double height,
                                      double angle1_deg, double angle2_deg);

 private:
  std::vector<Segment> segments_;
  std::vector<Corner> corners_;
};

}  // namespace otadapt
