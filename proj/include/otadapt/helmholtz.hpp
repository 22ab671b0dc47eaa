#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <map>

#include "otadapt/fields.hpp"
#include "otadapt/mesh.hpp"

namespace otadapt {

/// Screened-Poisson problem w - div(kappa grad w) = b with per-segment
/// homogeneous boundary conditions. The continuous-Galerkin space has the
/// mesh's degree; degrees of freedom are the mesh's shared-node classes.
struct HelmholtzProblem {
  enum class BC { neumann0, dirichlet0 };

  const Mesh* mesh = nullptr;
  double kappa = 1.0;
  const ScalarFieldDG* source_field = nullptr;              ///< either this...
  std::function<double(double, double)> source_fn;          ///< ...or this
  std::map<int, BC> bc;  ///< per segment tag; untagged segments get neumann0

  HelmholtzProblem(const Mesh& m, double k) : mesh(&m), kappa(k) {}
};

/// Assembled system over node-class dofs, exposed for diagnostics and tests.
struct HelmholtzSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<char> constrained;  ///< per class: 1 if Dirichlet-eliminated
};

HelmholtzSystem assemble_helmholtz(const HelmholtzProblem& problem);

struct HelmholtzStats {
  double residual = 0.0;  ///< relative linear-system residual
  bool used_iterative = false;
  int iterations = 0;
};

/// Direct sparse factorization with an iterative CG (Jacobi) fallback.
/// The returned field is continuous: identified nodes share values.
/// Throws SolverFailure when the relative residual cannot reach 1e-10.
ScalarFieldDG solve_helmholtz(const HelmholtzProblem& problem,
                              HelmholtzStats* stats = nullptr);

}  // namespace otadapt
