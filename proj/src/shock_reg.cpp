#include "otadapt/shock_reg.hpp"

#include <cmath>
#include <limits>

#include "otadapt/error.hpp"
#include "otadapt/helmholtz.hpp"

namespace otadapt {

double mu_ramp(double eta_bar, double eta_T) {
  const double pi = std::acos(-1.0);
  const double z = eta_bar - eta_T;
  return z * (std::atan(100.0 * z) / pi + 0.5) - std::atan(100.0) / pi + 0.5;
}

ScalarFieldDG av_field(const ScalarFieldDG& eta, double lambda1, double eta_T,
                       bool* degenerate) {
  const double norm_inf = eta.max_abs_nodal();
  if (degenerate) *degenerate = norm_inf == 0.0;
  ScalarFieldDG av(eta.mesh());
  if (norm_inf == 0.0) return av;
  for (size_t i = 0; i < av.coeffs().size(); ++i)
    av.coeffs()[i] = lambda1 * mu_ramp(eta.coeffs()[i] / norm_inf, eta_T);
  return av;
}

std::vector<int> shock_elements(const ScalarFieldDG& eta, double eta_T) {
  const Mesh& mesh = eta.mesh();
  const auto& master = mesh.master();
  const double norm_inf = eta.max_abs_nodal();
  std::vector<int> shock;
  if (norm_inf == 0.0) return shock;
  for (int e = 0; e < mesh.elem_count(); ++e) {
    const auto geom = mesh.jacobians(e);
    double mass = 0.0, area = 0.0;
    for (int g = 0; g < master.quad_count(); ++g) {
      double value = 0.0;
      for (int j = 0; j < mesh.nodes_per_elem(); ++j)
        value += eta.at(e, j) * master.basis_at_quad()(g, j);
      const double w = master.quad_weights()[g] * geom.det_j[g];
      mass += w * value / norm_inf;
      area += w;
    }
    if (mass >= eta_T * area) shock.push_back(e);
  }
  return shock;
}

HomotopyState homotopy_step(const HomotopyState& state) {
  HomotopyState next = state;
  const double factor = std::pow(state.zeta, state.n);
  next.lambda1 = factor * state.lambda1;
  next.lambda2 = 1.0 + factor * (state.lambda2 - 1.0);
  next.n = state.n + 1;
  return next;
}

ConstraintVerdict check_constraints(const StateFieldDG& state,
                                    const ScalarFieldDG& eta, double sigma0,
                                    double C0, XiChoice xi_choice, double eta_T) {
  const Mesh& mesh = state.mesh();
  const auto& master = mesh.master();
  const int np = mesh.nodes_per_elem();

  // Positivity of density at nodes first (pressure needs rho > 0).
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < np; ++j) {
      const double rho = state.at(e, j, 0);
      if (rho <= 0.0)
        return {false, ConstraintVerdict::Reason::density, e, rho,
                "non-positive density at a node of element " + std::to_string(e)};
    }
  const ScalarFieldDG rho = state.component(0);
  const ScalarFieldDG p = state.derived(DerivedQuantity::pressure);
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < np; ++j)
      if (p.at(e, j) <= 0.0)
        return {false, ConstraintVerdict::Reason::pressure, e, p.at(e, j),
                "non-positive pressure at a node of element " + std::to_string(e)};
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int g = 0; g < master.quad_count(); ++g) {
      double rho_q = 0.0, p_q = 0.0;
      for (int j = 0; j < np; ++j) {
        rho_q += rho.at(e, j) * master.basis_at_quad()(g, j);
        p_q += p.at(e, j) * master.basis_at_quad()(g, j);
      }
      if (rho_q <= 0.0)
        return {false, ConstraintVerdict::Reason::density, e, rho_q,
                "non-positive density at a quadrature point of element " +
                    std::to_string(e)};
      if (p_q <= 0.0)
        return {false, ConstraintVerdict::Reason::pressure, e, p_q,
                "non-positive pressure at a quadrature point of element " +
                    std::to_string(e)};
    }

  const std::vector<int> shock = shock_elements(eta, eta_T);
  ScalarFieldDG xi = rho;
  if (xi_choice == XiChoice::pressure) xi = p;
  if (xi_choice == XiChoice::mach) xi = state.derived(DerivedQuantity::mach);
  const SigmaResult sigma = sigma_smoothness(xi, shock);
  if (sigma.sigma > C0 * sigma0) {
    int worst = -1;
    double worst_value = -1.0;
    for (int e : shock)
      if (sigma.sigma_K[e] > worst_value) {
        worst_value = sigma.sigma_K[e];
        worst = e;
      }
    return {false, ConstraintVerdict::Reason::smoothness, worst, sigma.sigma,
            "smoothness indicator " + std::to_string(sigma.sigma) + " exceeds " +
                std::to_string(C0) + " * " + std::to_string(sigma0)};
  }
  ConstraintVerdict verdict;
  verdict.value = sigma.sigma;
  return verdict;
}

ScalarFieldDG eta_solve(const Mesh& mesh, const StateFieldDG& state,
                        double lambda2, double ell,
                        const std::vector<int>& wall_segments,
                        double s_max_factor, double sharpness) {
  MonitorConfig config;
  config.s_max_factor = s_max_factor;
  config.g_sharpness = sharpness;
  const ScalarFieldDG s = source_s(state, config);

  HelmholtzProblem problem(mesh, lambda2 * lambda2 * ell * ell);
  problem.source_field = &s;
  for (int seg : wall_segments) problem.bc[seg] = HelmholtzProblem::BC::dirichlet0;
  return solve_helmholtz(problem);
}

ScalarFieldDG initial_eta(const Mesh& mesh, const BoundaryGeometry& geometry,
                          const std::vector<int>& wall_segments) {
  if (wall_segments.empty())
    return ScalarFieldDG::from_function(mesh, [](double, double) { return 1.0; });
  const double h = mesh.h_min();
  return ScalarFieldDG::from_function(mesh, [&](double x, double y) {
    double d = std::numeric_limits<double>::max();
    for (int seg : wall_segments)
      d = std::min(d, geometry.segment(seg).distance(x, y));
    const double r = d / (2.0 * h);
    return 1.0 - std::exp(-r * r);
  });
}

HomotopyResult run_homotopy(const Mesh& mesh,
                            const std::function<StateFieldDG(int)>& provider,
                            const HomotopyParams& params) {
  HomotopyResult result;
  HomotopyState schedule{1, params.lambda01, params.lambda02, params.zeta};
  const double ell = mesh.h_min();

  StateFieldDG previous = provider(0);
  for (int n = 1; n <= params.max_steps; ++n) {
    const ScalarFieldDG eta =
        eta_solve(mesh, previous, schedule.lambda2, ell, params.wall_segments);
    StateFieldDG current = provider(n);
    // The first step runs at lambda_0 and pins the smoothness baseline.
    const double baseline =
        n == 1 ? std::numeric_limits<double>::max() : result.sigma0;
    ConstraintVerdict verdict = check_constraints(
        current, eta, baseline, params.C0, params.xi_choice, params.eta_T);
    if (n == 1) result.sigma0 = verdict.pass ? verdict.value : 0.0;
    result.trace.push_back({n, schedule.lambda1, schedule.lambda2,
                            verdict.pass ? verdict.value : -1.0, verdict});
    if (!verdict.pass) {
      result.accepted_n = n - 1;
      return result;
    }
    result.accepted_n = n;
    previous = std::move(current);
    schedule = homotopy_step(schedule);
  }
  return result;
}

}  // namespace otadapt
