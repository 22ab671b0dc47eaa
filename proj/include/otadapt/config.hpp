#pragma once

#include <map>
#include <optional>
#include <string>

#include "otadapt/geometry.hpp"
#include "otadapt/monge_ampere.hpp"
#include "otadapt/monitor.hpp"
#include "otadapt/shock_reg.hpp"

namespace otadapt {

/// Full run configuration. Files use a sectioned key/value format with the
/// versioned header `otadapt 1`; all values below are the embedded defaults
/// and are echoed into the run report.
struct AdaptConfig {
  // [mesh] either a file or a generator line:
  //   generate = square <nx> <ny> <k>
  //   generate = rect <x0> <y0> <x1> <y1> <nx> <ny> <k>
  //   generate = annulus <r0> <r1> <nr> <nt> <k>
  //   generate = ramp <x1> <x2> <x3> <H> <a1> <a2> <nx1> <nx2> <nx3> <ny> <k>
  std::string mesh_file;
  std::string mesh_generate;

  // [geometry] preset (rect/ramp/annulus, mirroring the generators) or
  // explicit `segment = line x0 y0 x1 y1` / `segment = circle cx cy r orient`
  // plus `corner = x y segA segB` lines; `wall = i j ...` marks wall segments.
  std::optional<BoundaryGeometry> geometry;

  // [state]
  std::string state_file;
  std::string state_preset;
  std::map<std::string, double> state_params;
  double gamma = 1.4;

  // [density] optional analytic density override for ma-solve:
  //   preset = uniform | ring (with cx/cy/radius/width/amplitude keys)
  std::string density_preset;
  std::map<std::string, double> density_params;

  MonitorConfig monitor;   // [monitor]
  MAParams ma;             // [ma]

  // [adapt]
  int max_adapt = 1;
  double tol_adapt = 1e-3;

  // [homotopy]
  HomotopyParams homotopy;

  // [output]
  std::string output_dir = "out";
  bool write_vtk = true;
  bool write_fields = true;
  bool write_eta = false;  ///< also solve for eta and export the AV field
};

AdaptConfig load_config(const std::string& path);

/// Builds the mesh named by the config (file or generator).
Mesh make_config_mesh(const AdaptConfig& config);

}  // namespace otadapt
