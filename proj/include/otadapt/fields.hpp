#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "otadapt/mesh.hpp"

namespace otadapt {

/// Scalar DG field over a Mesh: per-element nodal coefficients, duplicated at
/// shared nodes. Immutable usage pattern; evaluation is thread-safe.
class ScalarFieldDG {
 public:
  explicit ScalarFieldDG(const Mesh& mesh);
  static ScalarFieldDG from_function(const Mesh& mesh,
                                     const std::function<double(double, double)>& f);

  const Mesh& mesh() const { return *mesh_; }
  double at(int e, int j) const { return coeff_[e * np() + j]; }
  double& at(int e, int j) { return coeff_[e * np() + j]; }
  const std::vector<double>& coeffs() const { return coeff_; }
  std::vector<double>& coeffs() { return coeff_; }
  int np() const { return mesh_->nodes_per_elem(); }

  /// Value at a located reference point.
  double eval_at(const Mesh::Location& loc) const;
  std::array<double, 2> grad_at(const Mesh::Location& loc) const;

  double eval(double x, double y) const;                 ///< throws NotFound outside
  std::array<double, 2> eval_grad(double x, double y) const;

  struct Clamped {
    double value;
    std::array<double, 2> grad;
    bool clamped;
  };
  Clamped eval_clamped(double x, double y) const;        ///< never throws

  /// Nodal gradient of the interpolant within each element.
  void nodal_gradient(std::vector<double>& ddx, std::vector<double>& ddy) const;

  double max_abs_nodal() const;
  double min_nodal() const;
  double max_nodal() const;
  double l2_norm() const;
  double integral() const;

  /// New coefficients = evaluation at the target's nodes; same-index element
  /// is tried first so transfer between identical meshes is exact.
  ScalarFieldDG interpolate_onto(const Mesh& target) const;

 private:
  const Mesh* mesh_;
  std::vector<double> coeff_;
};

enum class DerivedQuantity { pressure, mach, velocity, temperature_proxy };

/// Conserved-variable field (rho, rho v1, rho v2, rho E) with ideal-gas
/// closure p = (gamma - 1) rho (E - |v|^2 / 2).
class StateFieldDG {
 public:
  explicit StateFieldDG(const Mesh& mesh, double gamma = 1.4);
  static StateFieldDG from_function(
      const Mesh& mesh,
      const std::function<std::array<double, 4>(double, double)>& f,
      double gamma = 1.4);

  const Mesh& mesh() const { return *mesh_; }
  double gamma() const { return gamma_; }
  int np() const { return mesh_->nodes_per_elem(); }

  double at(int e, int j, int c) const { return coeff_[(e * np() + j) * 4 + c]; }
  double& at(int e, int j, int c) { return coeff_[(e * np() + j) * 4 + c]; }
  const std::vector<double>& coeffs() const { return coeff_; }

  ScalarFieldDG component(int c) const;

  /// Nodewise derived quantity re-expanded on the same nodal basis.
  /// Throws NonPositiveDensity (naming the element) when rho <= 0 is hit.
  ScalarFieldDG derived(DerivedQuantity which) const;

  /// Shock strength S = -div v from the DG derivative of the nodal velocity.
  ScalarFieldDG shock_strength() const;

  StateFieldDG interpolate_onto(const Mesh& target) const;

 private:
  const Mesh* mesh_;
  double gamma_;
  std::vector<double> coeff_;
};

/// Element-mean of |xi/xi* - 1| where xi* is the modal truncation to degree
/// k-1; sigma is the max over the shock element set (0 for an empty set).
struct SigmaResult {
  double sigma = 0.0;
  std::vector<double> sigma_K;
};
SigmaResult sigma_smoothness(const ScalarFieldDG& xi,
                             const std::vector<int>& shock_set);

/// Relative L2 difference of two fields over the first field's mesh.
double relative_l2_change(const ScalarFieldDG& a, const ScalarFieldDG& b);

}  // namespace otadapt
