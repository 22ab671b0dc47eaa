#pragma once

#include <vector>

namespace otadapt {

/// One-dimensional quadrature rule on [-1, 1].
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
Rule1D gauss_legendre(int n);

/// n Gauss-Lobatto points on [-1, 1] (endpoints included), n >= 2.
/// Used as nodal points; the quadrature weights are not needed here.
std::vector<double> gauss_lobatto_nodes(int n);

/// Legendre polynomial P_n and derivative P_n' at x.
void legendre_eval(int n, double x, double& p, double& dp);

/// L2-orthonormal Legendre value on [-1,1]: sqrt((2n+1)/2) * P_n(x).
double legendre_orthonormal(int n, double x);

}  // namespace otadapt
