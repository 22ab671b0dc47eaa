#include "otadapt/monitor.hpp"

#include <cmath>

#include "otadapt/error.hpp"
#include "otadapt/helmholtz.hpp"

namespace otadapt {

namespace {
double arctan_ramp(double z, double sharpness) {
  return z * (std::atan(sharpness * z) / std::acos(-1.0) + 0.5);
}
}  // namespace

double clip_g(double S, double s_max, double sharpness) {
  return arctan_ramp(S, sharpness) - arctan_ramp(S - s_max, sharpness);
}

ScalarFieldDG source_s(const StateFieldDG& state, const MonitorConfig& config,
                       bool* degenerate) {
  ScalarFieldDG S = state.shock_strength();
  const double norm_inf = S.max_abs_nodal();
  if (degenerate) *degenerate = norm_inf == 0.0;
  ScalarFieldDG s(state.mesh());
  if (norm_inf == 0.0) return s;
  const double s_max = config.s_max_factor * norm_inf;
  for (size_t i = 0; i < s.coeffs().size(); ++i)
    s.coeffs()[i] = clip_g(S.coeffs()[i], s_max, config.g_sharpness);
  return s;
}

ScalarFieldDG indicator_b(const StateFieldDG& state, const MonitorConfig& config,
                          bool* degenerate) {
  ScalarFieldDG b(state.mesh());
  if (config.beta < 0.0) throw Error("indicator_b: beta must be >= 0");
  if (config.option == MonitorConfig::Option::velocity_divergence) {
    const ScalarFieldDG s = source_s(state, config, degenerate);
    for (size_t i = 0; i < b.coeffs().size(); ++i)
      b.coeffs()[i] = std::sqrt(1.0 + config.beta * s.coeffs()[i]);
    return b;
  }
  // Density-gradient option: b = sqrt(1 + beta g(|grad rho|)).
  const ScalarFieldDG rho = state.component(0);
  std::vector<double> ddx, ddy;
  rho.nodal_gradient(ddx, ddy);
  double norm_inf = 0.0;
  for (size_t i = 0; i < ddx.size(); ++i)
    norm_inf = std::max(norm_inf, std::hypot(ddx[i], ddy[i]));
  if (degenerate) *degenerate = norm_inf == 0.0;
  if (norm_inf == 0.0) {
    for (auto& c : b.coeffs()) c = 1.0;
    return b;
  }
  const double s_max = config.s_max_factor * norm_inf;
  for (size_t i = 0; i < b.coeffs().size(); ++i)
    b.coeffs()[i] = std::sqrt(
        1.0 + config.beta * clip_g(std::hypot(ddx[i], ddy[i]), s_max,
                                   config.g_sharpness));
  return b;
}

MeshDensity::MeshDensity(const Mesh& mesh, ScalarFieldDG rho, double theta)
    : mesh_(&mesh), rho_(std::move(rho)), theta_(theta) {}

DensityEvaluator::Value MeshDensity::eval(double x, double y) const {
  const auto v = rho_.eval_clamped(x, y);
  if (v.clamped) clamps_.fetch_add(1);
  return {v.value, v.grad, v.clamped};
}

std::unique_ptr<MeshDensity> build_density(const Mesh& mesh,
                                           const StateFieldDG& state,
                                           const MonitorConfig& config) {
  ScalarFieldDG b = indicator_b(state, config);
  ScalarFieldDG rho(mesh);
  if (config.smoothing) {
    const double ell = config.ell_factor * mesh.h_min();
    HelmholtzProblem problem(mesh, ell * ell);
    problem.source_field = &b;
    rho = solve_helmholtz(problem);
  } else {
    rho = b;
  }

  const double area = mesh.area();
  const double theta = rho.integral() / area;

  // Strict positivity at every quadrature point.
  const auto& master = mesh.master();
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int g = 0; g < master.quad_count(); ++g) {
      double value = 0.0;
      for (int j = 0; j < mesh.nodes_per_elem(); ++j)
        value += rho.at(e, j) * master.basis_at_quad()(g, j);
      if (value <= 0.0) {
        const auto p = mesh.forward_map(e, master.quad_points()[g][0],
                                        master.quad_points()[g][1]);
        throw NonPositiveDensityFunction(
            "build_density: density " + std::to_string(value) + " at (" +
            std::to_string(p[0]) + ", " + std::to_string(p[1]) + ") in element " +
            std::to_string(e));
      }
    }

  return std::make_unique<MeshDensity>(mesh, std::move(rho), theta);
}

}  // namespace otadapt
