#include "otadapt/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace otadapt {

void legendre_eval(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int m = 2; m <= n; ++m) {
    const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  // (1-x^2) P_n' = n (P_{n-1} - x P_n)
  if (std::abs(1.0 - x * x) > 1e-14) {
    dp = n * (p0 - x * p1) / (1.0 - x * x);
  } else {
    dp = 0.5 * n * (n + 1.0) * (x > 0 ? 1.0 : (n % 2 == 0 ? -1.0 : 1.0));
  }
}

double legendre_orthonormal(int n, double x) {
  double p, dp;
  legendre_eval(n, x, p, dp);
  return std::sqrt((2.0 * n + 1.0) / 2.0) * p;
}

Rule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre_eval(n, x, p, dp);
      const double dx = -p / dp;
      x += dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre_eval(n, x, p, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
  }
  return rule;
}

std::vector<double> gauss_lobatto_nodes(int n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto_nodes: n must be >= 2");
  std::vector<double> nodes(n);
  nodes.front() = -1.0;
  nodes.back() = 1.0;
  const double pi = std::acos(-1.0);
  // Interior points are the roots of P'_{n-1}.
  for (int i = 1; i < n - 1; ++i) {
    double x = std::cos(pi * (n - 1 - i) / (n - 1.0));
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre_eval(n - 1, x, p, dp);
      // d/dx P'_{n-1} from the Legendre ODE: (1-x^2) P'' = 2x P' - m(m+1) P
      const double m = n - 1.0;
      const double ddp = (2.0 * x * dp - m * (m + 1.0) * p) / (1.0 - x * x);
      const double dx = -dp / ddp;
      x += dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
  }
  return nodes;
}

}  // namespace otadapt
