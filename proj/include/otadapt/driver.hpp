#pragma once

#include <string>
#include <vector>

#include "otadapt/config.hpp"
#include "otadapt/mesh.hpp"

namespace otadapt {

struct IterationRecord {
  int index = 0;
  double theta = 0.0;
  int ma_iterations = 0;
  double ma_final_residual = 0.0;
  double ma_equation_residual = 0.0;
  double min_det_H = 0.0;
  double min_det_J = 0.0;
  double max_boundary_c = 0.0;
  double mean_u = 0.0;
  long clamp_count = 0;
  int slide_events = 0;
  double duplicate_spread = 0.0;
  double h_min = 0.0;
  double state_change = 0.0;
  double seconds = 0.0;
  // Filled when the eta/AV diagnostics are requested.
  double eta_max = 0.0;
  int shock_element_count = 0;
};

struct RunReport {
  bool converged = false;
  int iterations_run = 0;
  std::vector<IterationRecord> iterations;
  std::string note;  ///< records the flow-solve substitution
  std::string report_path;

  std::string to_json(const AdaptConfig& config) const;
};

/// Runs the adaptation loop: build density -> Monge-Ampere solve -> extract
/// adapted mesh -> corner fix -> transfer the state; stops at max_adapt or
/// when the relative state change falls below tol_adapt. Writes adapted
/// meshes, fields and report.json into the output directory.
RunReport run_adaptation(const AdaptConfig& config);

/// Single Monge-Ampere solve (density-only test mode); writes the adapted
/// mesh and a report containing the max deviation of q from the identity.
struct MASolveReport {
  double q_minus_x_inf = 0.0;
  int iterations = 0;
  double final_residual = 0.0;
  double min_det_H = 0.0;
  double equid_deviation = 0.0;
  std::string report_path;
};
MASolveReport run_ma_solve(const AdaptConfig& config);

/// Re-tags boundary faces by proximity of their nodes to geometry segments
/// (tolerance tol_factor * diameter). Throws InvalidMesh when a face is not
/// near any segment.
Mesh match_boundary_segments(const Mesh& mesh, const BoundaryGeometry& geometry,
                             double tol_factor = 1e-8);

}  // namespace otadapt
