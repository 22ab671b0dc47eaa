#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <memory>

#include "otadapt/fields.hpp"
#include "otadapt/mesh.hpp"

namespace otadapt {

/// Mesh density construction parameters.
struct MonitorConfig {
  enum class Option { velocity_divergence, density_gradient };
  Option option = Option::density_gradient;
  double beta = 1.0;            ///< indicator strength, >= 0
  double s_max_factor = 0.5;    ///< clip level as a fraction of the max sensor
  bool smoothing = true;
  double ell_factor = 1.0;      ///< Helmholtz length ell = ell_factor * h_min
  double g_sharpness = 100.0;
};

/// Smooth clip: ~0 for S << 0, ~S on [0, s_max], ~s_max for S >> s_max.
/// Built as r(S) - r(S - s_max) with the arctan ramp
/// r(z) = z (arctan(sharpness z)/pi + 1/2); monotone nondecreasing.
double clip_g(double S, double s_max, double sharpness = 100.0);

/// s = g(S) nodewise with s_max = s_max_factor * max|S| over nodes.
/// A vanishing sensor is degenerate: returns the zero field and sets the flag.
ScalarFieldDG source_s(const StateFieldDG& state, const MonitorConfig& config,
                       bool* degenerate = nullptr);

/// Resolution indicator: sqrt(1 + beta s) (velocity-divergence option) or
/// sqrt(1 + beta g(|grad rho|)) (density-gradient option).
ScalarFieldDG indicator_b(const StateFieldDG& state, const MonitorConfig& config,
                          bool* degenerate = nullptr);

/// Point evaluation interface for the Monge-Ampere right-hand side. Queries
/// may transiently leave the domain: evaluation clamps and counts.
class DensityEvaluator {
 public:
  struct Value {
    double rho;
    std::array<double, 2> grad;
    bool clamped;
  };

  virtual ~DensityEvaluator() = default;
  virtual Value eval(double x, double y) const = 0;
  virtual double theta() const = 0;

  long clamp_count() const { return clamps_.load(); }
  void reset_clamp_count() const { clamps_.store(0); }

 protected:
  mutable std::atomic<long> clamps_{0};
};

/// Density backed by a smoothed field on a mesh.
class MeshDensity final : public DensityEvaluator {
 public:
  MeshDensity(const Mesh& mesh, ScalarFieldDG rho, double theta);
  Value eval(double x, double y) const override;
  double theta() const override { return theta_; }
  const ScalarFieldDG& field() const { return rho_; }

 private:
  const Mesh* mesh_;
  ScalarFieldDG rho_;
  double theta_;
};

/// Density given in closed form (manufactured and preset cases).
class AnalyticDensity final : public DensityEvaluator {
 public:
  using Fn = std::function<std::array<double, 3>(double, double)>;  ///< rho, drho/dx, drho/dy
  AnalyticDensity(Fn fn, double theta) : fn_(std::move(fn)), theta_(theta) {}
  Value eval(double x, double y) const override {
    const auto v = fn_(x, y);
    return {v[0], {v[1], v[2]}, false};
  }
  double theta() const override { return theta_; }

 private:
  Fn fn_;
  double theta_;
};

/// Smoothed mesh density from a flow state: indicator -> Helmholtz smoothing
/// (all-Neumann, ell = ell_factor * h_min) -> normalization theta.
/// Throws NonPositiveDensityFunction if positivity fails at any quadrature point.
std::unique_ptr<MeshDensity> build_density(const Mesh& mesh,
                                           const StateFieldDG& state,
                                           const MonitorConfig& config);

}  // namespace otadapt
