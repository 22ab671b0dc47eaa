#pragma once

// Test-only oracles, independent of the library's computational paths:
// dense-sampling quadrature, closed-form affine inverses, manufactured
// solutions and convergence-rate fits.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracles {

/// Midpoint-rule integral over [-1,1]^2 with n x n samples.
inline double dense_integral_ref_square(const std::function<double(double, double)>& f,
                                        int n = 2000) {
  const double h = 2.0 / n;
  double total = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      total += f(-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h);
  return total * h * h;
}

/// Midpoint-rule 1D integral over [a, b].
inline double dense_integral_1d(const std::function<double(double)>& f, double a,
                                double b, int n = 200000) {
  const double h = (b - a) / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += f(a + (i + 0.5) * h);
  return total * h;
}

/// Least-squares slope of log(err) against log(h).
inline double fit_rate(const std::vector<double>& h, const std::vector<double>& err) {
  const int n = static_cast<int>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Closed-form inverse of the affine map x = A xi + b on the k=1 corner
/// parametrization.
inline std::array<double, 2> affine_inverse(const std::array<double, 4>& A,
                                            const std::array<double, 2>& b,
                                            double x, double y) {
  const double det = A[0] * A[3] - A[1] * A[2];
  const double rx = x - b[0], ry = y - b[1];
  return {(A[3] * rx - A[1] * ry) / det, (-A[2] * rx + A[0] * ry) / det};
}

/// Manufactured Monge-Ampere potential on the unit square:
/// u*(x) = |x|^2/2 + eps cos(pi x1) cos(pi x2) / pi^2. The normal derivative
/// of the perturbation vanishes on the boundary, so grad u* maps the square
/// onto itself; eps small keeps u* convex.
struct ManufacturedMA {
  double eps = 0.05;

  std::array<double, 2> grad(double x, double y) const {
    const double pi = std::acos(-1.0);
    return {x - eps / pi * std::sin(pi * x) * std::cos(pi * y),
            y - eps / pi * std::cos(pi * x) * std::sin(pi * y)};
  }
  std::array<double, 4> hessian(double x, double y) const {
    const double pi = std::acos(-1.0);
    const double cc = std::cos(pi * x) * std::cos(pi * y);
    const double ss = std::sin(pi * x) * std::sin(pi * y);
    return {1.0 - eps * cc, eps * ss, eps * ss, 1.0 - eps * cc};
  }
  double det_hessian(double x, double y) const {
    const auto H = hessian(x, y);
    return H[0] * H[3] - H[1] * H[2];
  }
  /// Newton inverse of the gradient map: finds xi with grad u*(xi) = (x, y).
  std::array<double, 2> inverse_grad(double x, double y) const {
    double u = x, v = y;
    for (int it = 0; it < 50; ++it) {
      const auto g = grad(u, v);
      const double fx = g[0] - x, fy = g[1] - y;
      if (std::hypot(fx, fy) < 1e-14) break;
      const auto H = hessian(u, v);
      const double det = H[0] * H[3] - H[1] * H[2];
      u -= (H[3] * fx - H[1] * fy) / det;
      v -= (-H[2] * fx + H[0] * fy) / det;
    }
    return {u, v};
  }
  /// Density rho'(x') = theta / det D2u*((grad u*)^{-1}(x')) with theta = 1.
  std::array<double, 3> density(double xp, double yp) const {
    const auto xi = inverse_grad(xp, yp);
    return {1.0 / det_hessian(xi[0], xi[1]), 0.0, 0.0};
  }
};

inline std::mt19937& rng() {
  static std::mt19937 gen(20240817u);
  return gen;
}

inline double uniform(double a, double b) {
  std::uniform_real_distribution<double> dist(a, b);
  return dist(rng());
}

}  // namespace oracles
