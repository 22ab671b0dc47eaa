#include "otadapt/presets.hpp"

#include <cmath>

#include "otadapt/error.hpp"

namespace otadapt {

namespace {

std::array<double, 4> conserved(double rho, double v1, double v2, double p,
                                double gamma) {
  const double E = p / ((gamma - 1.0) * rho) + 0.5 * (v1 * v1 + v2 * v2);
  return {rho, rho * v1, rho * v2, rho * E};
}

double get(const std::map<std::string, double>& params, const std::string& key,
           double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

StateFieldDG make_uniform_state(const Mesh& mesh, const UniformParams& p) {
  const double p_inf = 1.0 / (p.gamma * p.mach * p.mach);
  return StateFieldDG::from_function(
      mesh,
      [&](double, double) { return conserved(1.0, 1.0, 0.0, p_inf, p.gamma); },
      p.gamma);
}

StateFieldDG make_tanh_shock_state(const Mesh& mesh, const TanhShockParams& p) {
  return StateFieldDG::from_function(
      mesh,
      [&](double x, double) {
        const double rho =
            1.0 + 0.5 * p.amplitude * (1.0 + std::tanh((x - p.x_s) / p.delta));
        return conserved(rho, 1.0 / rho, 0.0, 1.0, p.gamma);
      },
      p.gamma);
}

StateFieldDG make_ring_state(const Mesh& mesh, const RingParams& p) {
  return StateFieldDG::from_function(
      mesh,
      [&](double x, double y) {
        const double d = std::hypot(x - p.cx, y - p.cy) - p.radius;
        const double rho = 1.0 + p.amplitude * std::exp(-d * d / (p.width * p.width));
        return conserved(rho, 0.0, 0.0, 1.0, p.gamma);
      },
      p.gamma);
}

StateFieldDG make_oblique_shock_state(const Mesh& mesh,
                                      const ObliqueShockParams& p) {
  const double pi = std::acos(-1.0);
  const double beta = p.beta_deg * pi / 180.0;
  const double g = p.gamma;
  const double m1n = p.mach * std::sin(beta);
  if (m1n <= 1.0) throw Error("oblique shock preset: normal Mach must exceed 1");
  const double rho1 = 1.0, p1 = 1.0 / (g * p.mach * p.mach);
  const double rho2 = rho1 * (g + 1.0) * m1n * m1n / ((g - 1.0) * m1n * m1n + 2.0);
  const double p2 = p1 * (1.0 + 2.0 * g / (g + 1.0) * (m1n * m1n - 1.0));
  // |v1| = 1; tangential velocity is preserved across the shock.
  const std::array<double, 2> dir{std::cos(beta), std::sin(beta)};
  const std::array<double, 2> nrm{std::sin(beta), -std::cos(beta)};
  const double vt = std::cos(beta);
  const double vn1 = std::sin(beta);
  const double vn2 = vn1 * rho1 / rho2;
  const std::array<double, 2> v2{vt * dir[0] + vn2 * nrm[0],
                                 vt * dir[1] + vn2 * nrm[1]};
  return StateFieldDG::from_function(
      mesh,
      [=](double x, double y) {
        const double s = (x - p.x0) * nrm[0] + (y - p.y0) * nrm[1];
        const double w = 0.5 * (1.0 + std::tanh(s / p.delta));
        const auto u1 = conserved(rho1, 1.0, 0.0, p1, g);
        const auto u2 = conserved(rho2, v2[0], v2[1], p2, g);
        return std::array<double, 4>{(1 - w) * u1[0] + w * u2[0],
                                     (1 - w) * u1[1] + w * u2[1],
                                     (1 - w) * u1[2] + w * u2[2],
                                     (1 - w) * u1[3] + w * u2[3]};
      },
      g);
}

StateFieldDG make_state_preset(const Mesh& mesh, const std::string& name,
                               const std::map<std::string, double>& params) {
  const double gamma = get(params, "gamma", 1.4);
  if (name == "uniform") {
    UniformParams p;
    p.mach = get(params, "mach", p.mach);
    p.gamma = gamma;
    return make_uniform_state(mesh, p);
  }
  if (name == "tanh-shock") {
    TanhShockParams p;
    p.x_s = get(params, "x_s", p.x_s);
    p.delta = get(params, "delta", p.delta);
    p.amplitude = get(params, "amplitude", p.amplitude);
    p.gamma = gamma;
    return make_tanh_shock_state(mesh, p);
  }
  if (name == "ring") {
    RingParams p;
    p.cx = get(params, "cx", p.cx);
    p.cy = get(params, "cy", p.cy);
    p.radius = get(params, "radius", p.radius);
    p.width = get(params, "width", p.width);
    p.amplitude = get(params, "amplitude", p.amplitude);
    p.gamma = gamma;
    return make_ring_state(mesh, p);
  }
  if (name == "oblique-shock") {
    ObliqueShockParams p;
    p.mach = get(params, "mach", p.mach);
    p.beta_deg = get(params, "beta_deg", p.beta_deg);
    p.x0 = get(params, "x0", p.x0);
    p.y0 = get(params, "y0", p.y0);
    p.delta = get(params, "delta", p.delta);
    p.gamma = gamma;
    return make_oblique_shock_state(mesh, p);
  }
  throw Error("unknown state preset: " + name);
}

std::unique_ptr<AnalyticDensity> make_ring_density(const Mesh& mesh,
                                                   const RingParams& p) {
  auto fn = [p](double x, double y) -> std::array<double, 3> {
    const double dx = x - p.cx, dy = y - p.cy;
    const double r = std::hypot(dx, dy);
    const double d = r - p.radius;
    const double e = p.amplitude * std::exp(-d * d / (p.width * p.width));
    const double dr = -2.0 * d / (p.width * p.width) * e;
    if (r < 1e-12) return {1.0 + e, 0.0, 0.0};
    return {1.0 + e, dr * dx / r, dr * dy / r};
  };
  // theta = integral of the density over the domain / area.
  const auto& master = mesh.master();
  double mass = 0.0, area = 0.0;
  for (int e = 0; e < mesh.elem_count(); ++e) {
    const auto geom = mesh.jacobians(e);
    for (int g = 0; g < master.quad_count(); ++g) {
      const auto pt = mesh.forward_map(e, master.quad_points()[g][0],
                                       master.quad_points()[g][1]);
      const double w = master.quad_weights()[g] * geom.det_j[g];
      mass += w * fn(pt[0], pt[1])[0];
      area += w;
    }
  }
  return std::make_unique<AnalyticDensity>(fn, mass / area);
}

std::unique_ptr<AnalyticDensity> make_uniform_density() {
  return std::make_unique<AnalyticDensity>(
      [](double, double) -> std::array<double, 3> { return {1.0, 0.0, 0.0}; },
      1.0);
}

}  // namespace otadapt
