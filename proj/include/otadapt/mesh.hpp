#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otadapt/master_element.hpp"

namespace otadapt {

/// Face record: interior faces pair two (element, local face) sides, boundary
/// faces carry a segment tag. Side a owns the global face parametrization;
/// on a conforming CCW mesh side b traverses the same curve with t -> -t.
struct MeshFace {
  int elem_a = -1;
  int face_a = -1;
  int elem_b = -1;
  int face_b = -1;
  int seg = -1;
  bool boundary() const { return elem_b < 0; }
};

struct ValidityIssue {
  int element = -1;
  std::string message;
};

struct ValidityReport {
  bool ok = true;
  std::vector<ValidityIssue> errors;
  std::vector<ValidityIssue> warnings;
};

/// High-order curved quadrilateral mesh with DG-style duplicated node storage
/// and a shared-node identification map. Immutable after construction; point
/// location uses a read-only index, so queries are thread-safe.
class Mesh {
 public:
  Mesh(int degree, std::vector<double> coords, std::vector<MeshFace> faces);

  int degree() const { return degree_; }
  int elem_count() const { return n_elem_; }
  int nodes_per_elem() const { return np_; }
  const MasterElement& master() const { return *master_; }

  /// Coordinates of node j of element e.
  double coord(int e, int j, int d) const { return coords_[(e * np_ + j) * 2 + d]; }
  /// Contiguous (x, y) pairs of the element's nodes.
  const double* elem_coords(int e) const { return &coords_[e * np_ * 2]; }
  const std::vector<double>& coords() const { return coords_; }

  const std::vector<MeshFace>& faces() const { return faces_; }

  // Shared-node identification (duplicated DG nodes that coincide).
  int class_count() const { return n_classes_; }
  int node_class(int e, int j) const { return node_class_[e * np_ + j]; }
  const std::vector<std::pair<int, int>>& class_members(int c) const {
    return class_members_[c];
  }

  std::array<double, 4> bbox() const { return bbox_; }  ///< {xmin, ymin, xmax, ymax}
  double diameter() const;

  /// Minimum distance between adjacent high-order nodes along the element's
  /// edge chains.
  double element_size(int e) const;
  double h_min() const;
  /// Sum of integrated element Jacobians.
  double area() const;

  struct ElementGeometry {
    Eigen::VectorXd det_j;   ///< at quadrature points
    Eigen::MatrixXd inv_j;   ///< rows: quadrature points; cols: J^-1 entries (11,12,21,22)
  };
  ElementGeometry jacobians(int e) const;

  ValidityReport validate(double aspect_warn = 50.0) const;

  struct Location {
    int elem = -1;
    double xi = 0.0, eta = 0.0;
    bool extrapolated = false;
  };

  /// Locates the element containing (x, y). Points inside the bounding box
  /// inflated by 1e-6 * diameter but outside all elements resolve to the
  /// element with the smallest reference-coordinate excess, with clamped
  /// reference coordinates and the extrapolated flag set.
  /// Throws NotFound outside the inflated bounding box.
  Location locate_point(double x, double y) const;
  /// Never throws: clamps far-outside queries into the bounding box first.
  Location locate_clamped(double x, double y) const;
  /// Tries `hint` element first; exact pickup when the point lies inside it.
  Location locate_with_hint(double x, double y, int hint) const;

  /// Physical point of reference coordinates (xi, eta) in element e.
  std::array<double, 2> forward_map(int e, double xi, double eta) const;

  /// Replaces all node coordinates (same connectivity); used by the adapted
  /// mesh extraction. Rebuilds derived data.
  Mesh with_coords(std::vector<double> new_coords) const;

 private:
  void build_classes();
  void build_index();
  std::optional<Location> search(double x, double y) const;

  int degree_;
  int np_;
  int n_elem_;
  std::shared_ptr<const MasterElement> master_;
  std::vector<double> coords_;
  std::vector<MeshFace> faces_;
  std::vector<int> node_class_;
  int n_classes_ = 0;
  std::vector<std::vector<std::pair<int, int>>> class_members_;
  std::array<double, 4> bbox_{};

  // Uniform background grid for point location.
  int bins_x_ = 0, bins_y_ = 0;
  std::vector<std::vector<int>> bin_elems_;
};

// Structured generators. Segment tags follow the matching BoundaryGeometry
// factories (rectangle: bottom 0, right 1, top 2, left 3).
Mesh structured_rect(double x0, double y0, double x1, double y1, int nx, int ny,
                     int degree);
/// Polar grid between radii r0 < r1; theta spans [theta0, theta1] and wraps
/// into a closed annulus when the span is a full circle. Tags: inner 0, outer 1
/// (plus 2/3 for the angular ends of an open sector).
Mesh structured_annulus(double r0, double r1, int nr, int nt, int degree,
                        double theta0 = 0.0, double theta1 = 0.0);
/// Transfinite grid over the double-ramp channel; nx1/nx2/nx3 cells on the
/// three bottom segments so ramp corners coincide with mesh vertices.
/// Tags match BoundaryGeometry::double_ramp (bottom chain 0..2, then 3..5).
Mesh ramp_channel(double x1, double x2, double x3, double height,
                  double angle1_deg, double angle2_deg, int nx1, int nx2, int nx3,
                  int ny, int degree);
/// Rectangle with one thin row of height delta at the bottom.
Mesh stretched_rect(double x0, double y0, double x1, double y1, int nx, int ny,
                    double delta, int degree);

}  // namespace otadapt
