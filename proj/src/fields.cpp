#include "otadapt/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otadapt/error.hpp"
#include "otadapt/quadrature.hpp"

namespace otadapt {

ScalarFieldDG::ScalarFieldDG(const Mesh& mesh)
    : mesh_(&mesh), coeff_(static_cast<size_t>(mesh.elem_count()) * mesh.nodes_per_elem(), 0.0) {}

ScalarFieldDG ScalarFieldDG::from_function(
    const Mesh& mesh, const std::function<double(double, double)>& f) {
  ScalarFieldDG field(mesh);
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j)
      field.at(e, j) = f(mesh.coord(e, j, 0), mesh.coord(e, j, 1));
  return field;
}

double ScalarFieldDG::eval_at(const Mesh::Location& loc) const {
  const int n = np();
  std::vector<double> v(n);
  mesh_->master().eval_basis(loc.xi, loc.eta, v.data());
  double value = 0.0;
  for (int j = 0; j < n; ++j) value += at(loc.elem, j) * v[j];
  return value;
}

std::array<double, 2> ScalarFieldDG::grad_at(const Mesh::Location& loc) const {
  const int n = np();
  std::vector<double> v(n), dxi(n), deta(n);
  mesh_->master().eval_basis_grad(loc.xi, loc.eta, v.data(), dxi.data(), deta.data());
  double gxi = 0.0, geta = 0.0;
  double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
  const double* xc = mesh_->elem_coords(loc.elem);
  for (int j = 0; j < n; ++j) {
    gxi += at(loc.elem, j) * dxi[j];
    geta += at(loc.elem, j) * deta[j];
    j11 += xc[2 * j] * dxi[j];
    j12 += xc[2 * j] * deta[j];
    j21 += xc[2 * j + 1] * dxi[j];
    j22 += xc[2 * j + 1] * deta[j];
  }
  const double det = j11 * j22 - j12 * j21;
  // grad_x = J^{-T} grad_ref
  return {(j22 * gxi - j21 * geta) / det, (-j12 * gxi + j11 * geta) / det};
}

double ScalarFieldDG::eval(double x, double y) const {
  return eval_at(mesh_->locate_point(x, y));
}

std::array<double, 2> ScalarFieldDG::eval_grad(double x, double y) const {
  return grad_at(mesh_->locate_point(x, y));
}

ScalarFieldDG::Clamped ScalarFieldDG::eval_clamped(double x, double y) const {
  const auto loc = mesh_->locate_clamped(x, y);
  return {eval_at(loc), grad_at(loc), loc.extrapolated};
}

void ScalarFieldDG::nodal_gradient(std::vector<double>& ddx,
                                   std::vector<double>& ddy) const {
  const int n = np();
  const auto& master = mesh_->master();
  const auto& dxi = master.dxi_at_nodes();
  const auto& deta = master.deta_at_nodes();
  ddx.assign(coeff_.size(), 0.0);
  ddy.assign(coeff_.size(), 0.0);
  for (int e = 0; e < mesh_->elem_count(); ++e) {
    const double* xc = mesh_->elem_coords(e);
    for (int i = 0; i < n; ++i) {
      double gxi = 0.0, geta = 0.0;
      double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
      for (int j = 0; j < n; ++j) {
        gxi += at(e, j) * dxi(i, j);
        geta += at(e, j) * deta(i, j);
        j11 += xc[2 * j] * dxi(i, j);
        j12 += xc[2 * j] * deta(i, j);
        j21 += xc[2 * j + 1] * dxi(i, j);
        j22 += xc[2 * j + 1] * deta(i, j);
      }
      const double det = j11 * j22 - j12 * j21;
      ddx[e * n + i] = (j22 * gxi - j21 * geta) / det;
      ddy[e * n + i] = (-j12 * gxi + j11 * geta) / det;
    }
  }
}

double ScalarFieldDG::max_abs_nodal() const {
  double m = 0.0;
  for (double c : coeff_) m = std::max(m, std::abs(c));
  return m;
}

double ScalarFieldDG::min_nodal() const {
  return *std::min_element(coeff_.begin(), coeff_.end());
}

double ScalarFieldDG::max_nodal() const {
  return *std::max_element(coeff_.begin(), coeff_.end());
}

double ScalarFieldDG::l2_norm() const {
  const auto& master = mesh_->master();
  const int n = np();
  double total = 0.0;
  for (int e = 0; e < mesh_->elem_count(); ++e) {
    const auto geom = mesh_->jacobians(e);
    for (int g = 0; g < master.quad_count(); ++g) {
      double value = 0.0;
      for (int j = 0; j < n; ++j) value += at(e, j) * master.basis_at_quad()(g, j);
      total += master.quad_weights()[g] * geom.det_j[g] * value * value;
    }
  }
  return std::sqrt(total);
}

double ScalarFieldDG::integral() const {
  const auto& master = mesh_->master();
  const int n = np();
  double total = 0.0;
  for (int e = 0; e < mesh_->elem_count(); ++e) {
    const auto geom = mesh_->jacobians(e);
    for (int g = 0; g < master.quad_count(); ++g) {
      double value = 0.0;
      for (int j = 0; j < n; ++j) value += at(e, j) * master.basis_at_quad()(g, j);
      total += master.quad_weights()[g] * geom.det_j[g] * value;
    }
  }
  return total;
}

ScalarFieldDG ScalarFieldDG::interpolate_onto(const Mesh& target) const {
  ScalarFieldDG out(target);
  const double inflate = 1e-6 * mesh_->diameter();
  const auto box = mesh_->bbox();
  for (int e = 0; e < target.elem_count(); ++e)
    for (int j = 0; j < target.nodes_per_elem(); ++j) {
      const double x = target.coord(e, j, 0), y = target.coord(e, j, 1);
      if (x < box[0] - inflate || x > box[2] + inflate || y < box[1] - inflate ||
          y > box[3] + inflate)
        throw NotFound("interpolate_onto: target node outside the source domain");
      const int hint = e < mesh_->elem_count() ? e : -1;
      auto loc = mesh_->locate_with_hint(x, y, hint);
      // Exact nodal pickup when the target coincides with a source node;
      // keeps same-mesh transfer an exact projection.
      const double snap = 1e-13 * mesh_->diameter();
      int hit = -1;
      for (int jj = 0; jj < np() && hit < 0; ++jj)
        if (std::abs(mesh_->coord(loc.elem, jj, 0) - x) <= snap &&
            std::abs(mesh_->coord(loc.elem, jj, 1) - y) <= snap)
          hit = jj;
      out.at(e, j) = hit >= 0 ? at(loc.elem, hit) : eval_at(loc);
    }
  return out;
}

StateFieldDG::StateFieldDG(const Mesh& mesh, double gamma)
    : mesh_(&mesh),
      gamma_(gamma),
      coeff_(static_cast<size_t>(mesh.elem_count()) * mesh.nodes_per_elem() * 4, 0.0) {}

StateFieldDG StateFieldDG::from_function(
    const Mesh& mesh, const std::function<std::array<double, 4>(double, double)>& f,
    double gamma) {
  StateFieldDG state(mesh, gamma);
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j) {
      const auto u = f(mesh.coord(e, j, 0), mesh.coord(e, j, 1));
      for (int c = 0; c < 4; ++c) state.at(e, j, c) = u[c];
    }
  return state;
}

ScalarFieldDG StateFieldDG::component(int c) const {
  ScalarFieldDG out(*mesh_);
  for (int e = 0; e < mesh_->elem_count(); ++e)
    for (int j = 0; j < np(); ++j) out.at(e, j) = at(e, j, c);
  return out;
}

ScalarFieldDG StateFieldDG::derived(DerivedQuantity which) const {
  ScalarFieldDG out(*mesh_);
  for (int e = 0; e < mesh_->elem_count(); ++e)
    for (int j = 0; j < np(); ++j) {
      const double rho = at(e, j, 0);
      if (rho <= 0.0 && which != DerivedQuantity::pressure)
        throw NonPositiveDensity(e, "derived: non-positive density in element " +
                                        std::to_string(e));
      const double v1 = at(e, j, 1) / rho, v2 = at(e, j, 2) / rho;
      const double p =
          (gamma_ - 1.0) * (at(e, j, 3) - 0.5 * rho * (v1 * v1 + v2 * v2));
      switch (which) {
        case DerivedQuantity::pressure:
          out.at(e, j) = p;
          break;
        case DerivedQuantity::mach:
          out.at(e, j) = std::hypot(v1, v2) / std::sqrt(gamma_ * p / rho);
          break;
        case DerivedQuantity::velocity:
          out.at(e, j) = std::hypot(v1, v2);
          break;
        case DerivedQuantity::temperature_proxy:
          out.at(e, j) = p / rho;
          break;
      }
    }
  return out;
}

ScalarFieldDG StateFieldDG::shock_strength() const {
  ScalarFieldDG v1(*mesh_), v2(*mesh_);
  for (int e = 0; e < mesh_->elem_count(); ++e)
    for (int j = 0; j < np(); ++j) {
      const double rho = at(e, j, 0);
      if (rho <= 0.0)
        throw NonPositiveDensity(
            e, "shock_strength: non-positive density in element " + std::to_string(e));
      v1.at(e, j) = at(e, j, 1) / rho;
      v2.at(e, j) = at(e, j, 2) / rho;
    }
  std::vector<double> d1x, d1y, d2x, d2y;
  v1.nodal_gradient(d1x, d1y);
  v2.nodal_gradient(d2x, d2y);
  ScalarFieldDG s(*mesh_);
  for (size_t i = 0; i < s.coeffs().size(); ++i)
    s.coeffs()[i] = -(d1x[i] + d2y[i]);
  return s;
}

StateFieldDG StateFieldDG::interpolate_onto(const Mesh& target) const {
  StateFieldDG out(target, gamma_);
  for (int c = 0; c < 4; ++c) {
    const ScalarFieldDG comp = component(c).interpolate_onto(target);
    for (int e = 0; e < target.elem_count(); ++e)
      for (int j = 0; j < target.nodes_per_elem(); ++j)
        out.at(e, j, c) = comp.at(e, j);
  }
  return out;
}

namespace {

// Adaptive panel cubature of |xi/xi* - 1| * det J over the reference square.
// The integrand has kinks along the zero set of xi - xi*, so panels are split
// until the two-level estimate settles.
struct SigmaIntegrand {
  const MasterElement* master;
  const Eigen::VectorXd* modal;
  const Eigen::VectorXd* modal_trunc;
  const double* elem_coords;
  double guard;

  double operator()(double xi, double eta) const {
    const int n = master->node_count();
    std::vector<double> v(n), dxi(n), deta(n);
    master->eval_basis_grad(xi, eta, v.data(), dxi.data(), deta.data());
    double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
    for (int j = 0; j < n; ++j) {
      j11 += elem_coords[2 * j] * dxi[j];
      j12 += elem_coords[2 * j] * deta[j];
      j21 += elem_coords[2 * j + 1] * dxi[j];
      j22 += elem_coords[2 * j + 1] * deta[j];
    }
    const double det = j11 * j22 - j12 * j21;
    const double value = master->eval_modal(*modal, xi, eta);
    double trunc = master->eval_modal(*modal_trunc, xi, eta);
    if (std::abs(trunc) < guard) trunc = trunc >= 0.0 ? guard : -guard;
    return std::abs(value / trunc - 1.0) * std::abs(det);
  }
};

double panel_quad(const SigmaIntegrand& f, const Rule1D& rule, double x0, double x1,
                  double y0, double y1) {
  const double sx = 0.5 * (x1 - x0), sy = 0.5 * (y1 - y0);
  double total = 0.0;
  for (int b = 0; b < rule.size(); ++b)
    for (int a = 0; a < rule.size(); ++a)
      total += rule.weights[a] * rule.weights[b] *
               f(x0 + sx * (rule.nodes[a] + 1.0), y0 + sy * (rule.nodes[b] + 1.0));
  return total * sx * sy;
}

double adaptive_quad(const SigmaIntegrand& f, const Rule1D& rule, double x0,
                     double x1, double y0, double y1, double tol, int depth) {
  const double coarse = panel_quad(f, rule, x0, x1, y0, y1);
  const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
  const double fine = panel_quad(f, rule, x0, xm, y0, ym) +
                      panel_quad(f, rule, xm, x1, y0, ym) +
                      panel_quad(f, rule, x0, xm, ym, y1) +
                      panel_quad(f, rule, xm, x1, ym, y1);
  if (std::abs(fine - coarse) <= tol || depth >= 10) return fine;
  // Kinks of |xi/xi* - 1| are curves: halve (not quarter) the budget per
  // level so panels crossing them terminate once their contribution is
  // below the local share of the tolerance.
  return adaptive_quad(f, rule, x0, xm, y0, ym, 0.5 * tol, depth + 1) +
         adaptive_quad(f, rule, xm, x1, y0, ym, 0.5 * tol, depth + 1) +
         adaptive_quad(f, rule, x0, xm, ym, y1, 0.5 * tol, depth + 1) +
         adaptive_quad(f, rule, xm, x1, ym, y1, 0.5 * tol, depth + 1);
}

}  // namespace

SigmaResult sigma_smoothness(const ScalarFieldDG& field,
                             const std::vector<int>& shock_set) {
  const Mesh& mesh = field.mesh();
  const auto& master = mesh.master();
  const int n = master.node_count();
  const Rule1D rule = gauss_legendre(mesh.degree() + 2);

  SigmaResult result;
  result.sigma_K.assign(mesh.elem_count(), 0.0);

  for (int e = 0; e < mesh.elem_count(); ++e) {
    double norm_inf = 0.0;
    Eigen::VectorXd nodal(n);
    for (int j = 0; j < n; ++j) {
      nodal[j] = field.at(e, j);
      norm_inf = std::max(norm_inf, std::abs(nodal[j]));
    }
    if (norm_inf == 0.0) continue;
    const Eigen::VectorXd modal = master.nodal_to_modal(nodal);
    const Eigen::VectorXd trunc = master.truncate_modal(modal, mesh.degree() - 1);
    if ((modal - trunc).lpNorm<Eigen::Infinity>() <= 1e-14 * norm_inf) continue;

    SigmaIntegrand f{&master, &modal, &trunc, mesh.elem_coords(e), 1e-8 * norm_inf};
    const auto geom = mesh.jacobians(e);
    double volume = 0.0;
    for (int g = 0; g < master.quad_count(); ++g)
      volume += master.quad_weights()[g] * geom.det_j[g];
    const double integral =
        adaptive_quad(f, rule, -1.0, 1.0, -1.0, 1.0, 3e-8 * volume, 0);
    result.sigma_K[e] = integral / volume;
  }

  for (int e : shock_set) result.sigma = std::max(result.sigma, result.sigma_K[e]);
  return result;
}

double relative_l2_change(const ScalarFieldDG& a, const ScalarFieldDG& b) {
  ScalarFieldDG diff = a;
  for (size_t i = 0; i < diff.coeffs().size(); ++i)
    diff.coeffs()[i] -= b.coeffs()[i];
  const double denom = b.l2_norm();
  return denom > 0.0 ? diff.l2_norm() / denom : diff.l2_norm();
}

}  // namespace otadapt
