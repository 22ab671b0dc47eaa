#include "otadapt/helmholtz.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "otadapt/error.hpp"

namespace otadapt {

HelmholtzSystem assemble_helmholtz(const HelmholtzProblem& problem) {
  const Mesh& mesh = *problem.mesh;
  const auto& master = mesh.master();
  const int np = mesh.nodes_per_elem();
  const int nq = master.quad_count();
  const int n_dof = mesh.class_count();
  if (problem.kappa <= 0.0) throw Error("helmholtz: kappa must be positive");
  if (!problem.source_field && !problem.source_fn)
    throw Error("helmholtz: no source given");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.elem_count()) * np * np);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_dof);

  std::vector<double> gx(np), gy(np);
  for (int e = 0; e < mesh.elem_count(); ++e) {
    const auto geom = mesh.jacobians(e);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(np, np);
    Eigen::VectorXd local_rhs = Eigen::VectorXd::Zero(np);
    for (int g = 0; g < nq; ++g) {
      const double w = master.quad_weights()[g] * geom.det_j[g];
      const double i11 = geom.inv_j(g, 0), i12 = geom.inv_j(g, 1);
      const double i21 = geom.inv_j(g, 2), i22 = geom.inv_j(g, 3);
      double b_val = 0.0;
      double x = 0.0, y = 0.0;
      for (int j = 0; j < np; ++j) {
        const double dxi = master.dxi_at_quad()(g, j);
        const double deta = master.deta_at_quad()(g, j);
        // physical gradient = J^{-T} reference gradient
        gx[j] = i11 * dxi + i21 * deta;
        gy[j] = i12 * dxi + i22 * deta;
        const double phi = master.basis_at_quad()(g, j);
        if (problem.source_field) {
          b_val += problem.source_field->at(e, j) * phi;
        } else {
          x += mesh.coord(e, j, 0) * phi;
          y += mesh.coord(e, j, 1) * phi;
        }
      }
      if (!problem.source_field) b_val = problem.source_fn(x, y);
      for (int i = 0; i < np; ++i) {
        const double phi_i = master.basis_at_quad()(g, i);
        local_rhs[i] += w * b_val * phi_i;
        for (int j = 0; j < np; ++j)
          local(i, j) += w * (phi_i * master.basis_at_quad()(g, j) +
                              problem.kappa * (gx[i] * gx[j] + gy[i] * gy[j]));
      }
    }
    for (int i = 0; i < np; ++i) {
      const int gi = mesh.node_class(e, i);
      rhs[gi] += local_rhs[i];
      for (int j = 0; j < np; ++j)
        triplets.emplace_back(gi, mesh.node_class(e, j), local(i, j));
    }
  }

  // Dirichlet classes: nodes on faces of dirichlet0-tagged segments.
  std::vector<char> constrained(n_dof, 0);
  for (const auto& face : mesh.faces()) {
    if (!face.boundary()) continue;
    auto it = problem.bc.find(face.seg);
    if (it == problem.bc.end() || it->second != HelmholtzProblem::BC::dirichlet0)
      continue;
    for (int j : master.face_nodes(face.face_a))
      constrained[mesh.node_class(face.elem_a, j)] = 1;
  }

  HelmholtzSystem system;
  system.constrained = constrained;
  system.matrix.resize(n_dof, n_dof);
  if (std::find(constrained.begin(), constrained.end(), 1) != constrained.end()) {
    // Symmetric row/column elimination with zero boundary values.
    std::vector<Eigen::Triplet<double>> kept;
    kept.reserve(triplets.size());
    for (const auto& t : triplets) {
      if (constrained[t.row()] || constrained[t.col()]) continue;
      kept.emplace_back(t);
    }
    for (int i = 0; i < n_dof; ++i)
      if (constrained[i]) {
        kept.emplace_back(i, i, 1.0);
        rhs[i] = 0.0;
      }
    system.matrix.setFromTriplets(kept.begin(), kept.end());
  } else {
    system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  }
  system.rhs = rhs;
  return system;
}

ScalarFieldDG solve_helmholtz(const HelmholtzProblem& problem,
                              HelmholtzStats* stats) {
  const Mesh& mesh = *problem.mesh;
  HelmholtzSystem system = assemble_helmholtz(problem);

  Eigen::VectorXd solution;
  double residual = std::numeric_limits<double>::max();
  const double rhs_norm = std::max(system.rhs.norm(), 1e-300);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct;
  direct.compute(system.matrix);
  bool used_iterative = false;
  int iterations = 0;
  if (direct.info() == Eigen::Success) {
    solution = direct.solve(system.rhs);
    residual = (system.matrix * solution - system.rhs).norm() / rhs_norm;
  }
  if (residual > 1e-10) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                             Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20 * system.matrix.rows());
    cg.compute(system.matrix);
    Eigen::VectorXd alt;
    if (residual < 1.0 && solution.size() == system.rhs.size())
      alt = cg.solveWithGuess(system.rhs, solution);
    else
      alt = cg.solve(system.rhs);
    const double alt_res = (system.matrix * alt - system.rhs).norm() / rhs_norm;
    if (alt_res < residual) {
      solution = alt;
      residual = alt_res;
      used_iterative = true;
      iterations = static_cast<int>(cg.iterations());
    }
  }
  if (residual > 1e-10)
    throw SolverFailure("helmholtz: linear solve stalled at relative residual " +
                        std::to_string(residual));
  if (stats) {
    stats->residual = residual;
    stats->used_iterative = used_iterative;
    stats->iterations = iterations;
  }

  ScalarFieldDG field(mesh);
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j)
      field.at(e, j) = solution[mesh.node_class(e, j)];
  return field;
}

}  // namespace otadapt
