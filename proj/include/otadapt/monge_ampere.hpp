#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <memory>
#include <vector>

#include "otadapt/fields.hpp"
#include "otadapt/geometry.hpp"
#include "otadapt/mesh.hpp"
#include "otadapt/monitor.hpp"

namespace otadapt {

struct MAParams {
  double tau = 1.0;       ///< HDG stabilization
  double tol_fp = 1e-8;   ///< relative L2 change of q between iterates
  int max_fp = 200;
  double tol_bc = 1e-6;   ///< accepted |c(q)| at boundary quadrature points
  double omega = 1.0;     ///< fixed-point damping; 1 = undamped
  bool sliding = true;    ///< allow boundary traces to change segments
};

/// Right-hand side of the first-order Monge-Ampere system:
/// f = sqrt(H11^2 + H22^2 + H12^2 + H21^2 + 2 theta / rho'(q)).
double f_rhs(const std::array<double, 4>& H, double q1, double q2, double theta,
             const DensityEvaluator& density);

/// Discrete solution of the Monge-Ampere second boundary value problem.
struct MASolution {
  explicit MASolution(const Mesh& mesh)
      : u(mesh), q1(mesh), q2(mesh), H{ScalarFieldDG(mesh), ScalarFieldDG(mesh),
                                       ScalarFieldDG(mesh), ScalarFieldDG(mesh)} {}

  ScalarFieldDG u;                     ///< potential (zero mean)
  ScalarFieldDG q1, q2;                ///< optimal-map components
  std::array<ScalarFieldDG, 4> H;      ///< Hessian components (11, 12, 21, 22)
  Eigen::VectorXd u_hat;               ///< face trace dofs
  double mean_multiplier = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;

  // Convergence diagnostics.
  double min_det_H = 0.0;              ///< over all quadrature points
  double max_boundary_c = 0.0;         ///< max |c(q)| at boundary quadrature points
  double mean_u = 0.0;                 ///< |integral of u|
  double ma_residual = 0.0;            ///< ||rho'(q) det H - theta||_L2 / theta
  long clamp_count = 0;                ///< out-of-domain density evaluations
  int slide_events = 0;
  std::map<int, int> face_active_segment;  ///< boundary face index -> segment
};

/// Fixed-point HDG solver: each iteration solves the linear trace system with
/// frozen f(H, q) and linearized boundary condition, then recovers H
/// elementwise. The zero-mean constraint is carried by one global multiplier.
/// A solver instance owns its iterate state; do not call solve() concurrently
/// on the same instance.
class MongeAmpereSolver {
 public:
  MongeAmpereSolver(const Mesh& mesh, const BoundaryGeometry& geometry,
                    MAParams params = {});

  /// Iterates from the identity-map initial guess until the relative q change
  /// drops below tol_fp. Throws MaxIterations (with the residual history),
  /// SingularSystem, or DensityEvaluationFailure.
  MASolution solve(const DensityEvaluator& density, double theta);

  /// Counting helpers (trace dofs + 1 multiplier).
  int trace_dof_count() const;
  int system_dimension() const;

  /// One linear fixed-point step from the identity initial guess, via the
  /// condensed trace system. Exposed so tests can compare against the
  /// monolithic assembly below.
  Eigen::VectorXd single_step_condensed(const DensityEvaluator& density,
                                        double theta) const;
  /// Same linear system assembled monolithically over (q, u, u_hat, rho) and
  /// solved densely; returns the (u_hat, rho) part for comparison.
  Eigen::VectorXd single_step_monolithic(const DensityEvaluator& density,
                                         double theta) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Adapted mesh: q averaged over duplicate nodes, boundary nodes projected
/// onto their active segments; connectivity, degree and tags unchanged.
/// Throws InvalidAdaptedMesh listing tangled elements.
Mesh extract_adapted_mesh(const Mesh& mesh, const MASolution& solution,
                          const BoundaryGeometry& geometry,
                          double* max_duplicate_spread = nullptr);

/// Snaps the closest vertex of the corner-crossing boundary element onto each
/// geometry corner and redistributes the high-order nodes of the two affected
/// boundary edges along the segment geometry.
Mesh corner_fix(const Mesh& mesh, const BoundaryGeometry& geometry);

/// Max distance of boundary-face nodes to the geometry (diagnostic).
double max_boundary_distance(const Mesh& mesh, const BoundaryGeometry& geometry);

/// Per-element relative deviation of mapped-cell mass from theta |K|:
/// max_K |int_K rho'(q) det(grad q) - theta |K|| / (theta |K|).
double equidistribution_deviation(const Mesh& mesh, const MASolution& solution,
                                  const DensityEvaluator& density, double theta);

}  // namespace otadapt
