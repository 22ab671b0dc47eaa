#pragma once

#include <map>
#include <memory>
#include <string>

#include "otadapt/fields.hpp"
#include "otadapt/mesh.hpp"
#include "otadapt/monitor.hpp"

namespace otadapt {

/// Analytic state presets stand in for the flow solve: they are sampled
/// nodewise on whatever mesh the adaptation loop currently carries.

struct UniformParams {
  double mach = 1.4;
  double gamma = 1.4;
};

struct TanhShockParams {
  double x_s = 0.5;       ///< interface position
  double delta = 0.02;    ///< layer width
  double amplitude = 2.0; ///< density jump
  double gamma = 1.4;
};

struct RingParams {
  double cx = 0.5, cy = 0.5;
  double radius = 0.25;
  double width = 0.1;
  double amplitude = 1.0;
  double gamma = 1.4;
};

struct ObliqueShockParams {
  double mach = 3.0;
  double beta_deg = 35.0;  ///< shock angle measured from the incoming flow
  double x0 = 0.3, y0 = 0.0;
  double delta = 0.02;
  double gamma = 1.4;
};

/// Free stream rho = 1, v = (1, 0), p = 1 / (gamma M^2); Mach is `mach` everywhere.
StateFieldDG make_uniform_state(const Mesh& mesh, const UniformParams& p = {});
/// Compression layer: density rises by `amplitude` across a tanh interface,
/// velocity follows constant mass flux, pressure 1.
StateFieldDG make_tanh_shock_state(const Mesh& mesh, const TanhShockParams& p = {});
/// Gaussian ring density bump at rest.
StateFieldDG make_ring_state(const Mesh& mesh, const RingParams& p = {});
/// Two uniform states joined by Rankine-Hugoniot oblique-shock relations,
/// blended by a tanh of the signed distance to the shock line.
StateFieldDG make_oblique_shock_state(const Mesh& mesh,
                                      const ObliqueShockParams& p = {});

/// Preset lookup by name (uniform, tanh-shock, ring, oblique-shock) with
/// numeric parameter overrides keyed by the field names above.
StateFieldDG make_state_preset(const Mesh& mesh, const std::string& name,
                               const std::map<std::string, double>& params);

/// Gaussian-ring analytic mesh density 1 + amp exp(-(|x-c| - r)^2 / w^2);
/// theta is computed by quadrature over the given mesh.
std::unique_ptr<AnalyticDensity> make_ring_density(const Mesh& mesh,
                                                   const RingParams& p);
std::unique_ptr<AnalyticDensity> make_uniform_density();

}  // namespace otadapt
