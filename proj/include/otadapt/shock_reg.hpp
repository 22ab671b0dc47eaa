#pragma once

#include <functional>
#include <string>
#include <vector>

#include "otadapt/fields.hpp"
#include "otadapt/geometry.hpp"
#include "otadapt/mesh.hpp"
#include "otadapt/monitor.hpp"

namespace otadapt {

/// Arctan ramp with threshold: mu = (e - eT)(arctan(100(e - eT))/pi + 1/2)
///                                  - arctan(100)/pi + 1/2,  e = eta_bar.
/// Vanishes (to the smoothing width) below the threshold and approaches
/// eta_bar - eta_T above it; range [0, 1 - eta_T] up to smoothing.
double mu_ramp(double eta_bar, double eta_T);

/// Artificial viscosity field lambda1 * mu(eta / max|eta|). A vanishing eta
/// is degenerate and yields the zero field (flag reported when requested).
ScalarFieldDG av_field(const ScalarFieldDG& eta, double lambda1, double eta_T,
                       bool* degenerate = nullptr);

/// Elements K with integral of eta_bar over K >= eta_T |K|.
std::vector<int> shock_elements(const ScalarFieldDG& eta, double eta_T);

/// Homotopy continuation schedule for the regularization pair (lambda1, lambda2):
/// lambda1 <- zeta^(n-1) lambda1 and lambda2 <- 1 + zeta^(n-1)(lambda2 - 1).
struct HomotopyState {
  int n = 1;  ///< iteration index; n = 1 carries the initial pair unchanged
  double lambda1 = 1.0;
  double lambda2 = 1.5;
  double zeta = 0.8;
};
HomotopyState homotopy_step(const HomotopyState& state);

/// Scalar variable used by the smoothness indicator.
enum class XiChoice { density, pressure, mach };

struct ConstraintVerdict {
  enum class Reason { none, density, pressure, smoothness };
  bool pass = true;
  Reason reason = Reason::none;
  int element = -1;
  double value = 0.0;     ///< offending value (rho, p, or sigma)
  std::string message;
};

/// Positivity of density and pressure at all nodes and quadrature points,
/// then sigma <= C0 * sigma0 over the shock-element set of eta.
ConstraintVerdict check_constraints(const StateFieldDG& state,
                                    const ScalarFieldDG& eta, double sigma0,
                                    double C0, XiChoice xi_choice,
                                    double eta_T = 0.2);

/// Helmholtz solve for the viscosity source field eta with kappa =
/// (lambda2 * ell)^2, Dirichlet 0 on wall segments, Neumann elsewhere.
ScalarFieldDG eta_solve(const Mesh& mesh, const StateFieldDG& state,
                        double lambda2, double ell,
                        const std::vector<int>& wall_segments,
                        double s_max_factor = 0.5, double sharpness = 100.0);

/// Smooth initial eta: 1 away from walls, vanishing at wall boundaries as
/// 1 - exp(-(d / (2 h_min))^2). Without wall segments it is identically 1.
ScalarFieldDG initial_eta(const Mesh& mesh, const BoundaryGeometry& geometry,
                          const std::vector<int>& wall_segments);

struct HomotopyTraceEntry {
  int n = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double sigma = 0.0;
  ConstraintVerdict verdict;
};

struct HomotopyResult {
  int accepted_n = 0;  ///< last step whose state satisfied all constraints
  double sigma0 = 0.0;
  std::vector<HomotopyTraceEntry> trace;
};

struct HomotopyParams {
  double lambda01 = 1.0;
  double lambda02 = 1.5;
  double zeta = 0.8;
  double eta_T = 0.2;
  double C0 = 5.0;
  XiChoice xi_choice = XiChoice::density;
  int max_steps = 20;
  std::vector<int> wall_segments;
};

/// Scheduler/acceptance over externally supplied per-step states (no flow
/// solver here): provider(n) returns the state computed at schedule step n
/// (n = 0 is the initial solve). Steps until a constraint fails, then accepts
/// the previous state.
HomotopyResult run_homotopy(const Mesh& mesh,
                            const std::function<StateFieldDG(int)>& provider,
                            const HomotopyParams& params);

}  // namespace otadapt
