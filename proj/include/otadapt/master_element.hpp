#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace otadapt {

/// Reference-element kernels on the square K_ref = [-1,1]^2: tensor-product
/// Gauss-Lobatto nodal basis of degree k, (k+2)^2 Gauss-Legendre quadrature,
/// nodal<->modal transforms and the inverse isoparametric map.
///
/// Immutable after construction; all operations are pure and thread-safe.
class MasterElement {
 public:
  /// Builds all tables for degree k, 1 <= k <= 8.
  explicit MasterElement(int degree);

  int degree() const { return degree_; }
  int node_count() const { return node_count_; }  ///< (k+1)^2
  int quad_count() const { return quad_count_; }  ///< (k+2)^2

  const std::vector<std::array<double, 2>>& nodes() const { return nodes_; }
  const std::vector<std::array<double, 2>>& quad_points() const { return quad_points_; }
  const std::vector<double>& quad_weights() const { return quad_weights_; }

  /// Precomputed tables, quad_count x node_count.
  const Eigen::MatrixXd& basis_at_quad() const { return basis_at_quad_; }
  const Eigen::MatrixXd& dxi_at_quad() const { return dxi_at_quad_; }
  const Eigen::MatrixXd& deta_at_quad() const { return deta_at_quad_; }
  /// Basis derivatives evaluated at the nodal points, node_count x node_count.
  const Eigen::MatrixXd& dxi_at_nodes() const { return dxi_at_nodes_; }
  const Eigen::MatrixXd& deta_at_nodes() const { return deta_at_nodes_; }

  /// phi_j(xi, eta) for all j; `values` must hold node_count() doubles.
  void eval_basis(double xi, double eta, double* values) const;
  /// Basis values and reference-coordinate gradients at (xi, eta).
  void eval_basis_grad(double xi, double eta, double* values, double* dxi,
                       double* deta) const;

  /// Nodal -> modal coefficients w.r.t. the L2-orthonormal tensor Legendre
  /// basis, ordered by total degree.
  Eigen::VectorXd nodal_to_modal(const Eigen::VectorXd& nodal) const;
  Eigen::VectorXd modal_to_nodal(const Eigen::VectorXd& modal) const;
  /// Zeroes every mode with per-variable degree above max_degree.
  Eigen::VectorXd truncate_modal(Eigen::VectorXd modal, int max_degree) const;
  /// (i, j) Legendre orders of each mode, total-degree ordering.
  const std::vector<std::array<int, 2>>& modal_orders() const { return modal_orders_; }
  /// Value of the modal expansion at a reference point.
  double eval_modal(const Eigen::VectorXd& modal, double xi, double eta) const;

  struct InverseMapResult {
    double xi = 0.0, eta = 0.0;
    bool inside = false;     ///< within [-1-eps, 1+eps]^2, eps = 1e-8
    bool converged = false;
    int iterations = 0;
  };

  /// Solves sum_j x_j phi_j(xi) = (x, y) by Newton iteration. Non-throwing;
  /// check `converged`. `elem_coords` holds node_count() (x, y) pairs.
  InverseMapResult try_inverse_map(const double* elem_coords, double x, double y,
                                   int max_newton = 30) const;
  /// Same, but throws NoConvergence when Newton fails.
  InverseMapResult inverse_map(const double* elem_coords, double x, double y,
                               int max_newton = 30) const;

  /// Faces 0..3 in counterclockwise order (bottom, right, top, left), each
  /// parametrized by t in [-1,1] so traversal is CCW around the element.
  static constexpr int face_count() { return 4; }
  /// Volume-node ids along face f; entry i sits at face parameter nodes_1d()[i].
  const std::vector<int>& face_nodes(int f) const { return face_nodes_[f]; }
  /// Reference coordinates of face point at parameter t.
  static void face_ref_point(int f, double t, double& xi, double& eta);

  const std::vector<double>& nodes_1d() const { return nodes_1d_; }
  /// 1D Lagrange basis values at the Gauss-Lobatto nodes; k+1 entries.
  void eval_basis_1d(double t, double* values) const;
  void eval_basis_1d_deriv(double t, double* values, double* derivs) const;

 private:
  int degree_;
  int node_count_;
  int quad_count_;
  std::vector<double> nodes_1d_;
  std::vector<std::array<double, 2>> nodes_;
  std::vector<std::array<double, 2>> quad_points_;
  std::vector<double> quad_weights_;
  Eigen::MatrixXd basis_at_quad_, dxi_at_quad_, deta_at_quad_;
  Eigen::MatrixXd dxi_at_nodes_, deta_at_nodes_;
  std::vector<std::array<int, 2>> modal_orders_;
  Eigen::MatrixXd vandermonde_;  // nodal values of each mode
  Eigen::PartialPivLU<Eigen::MatrixXd> vandermonde_lu_;
  std::array<std::vector<int>, 4> face_nodes_;
};

}  // namespace otadapt
