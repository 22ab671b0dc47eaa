#include "otadapt/master_element.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otadapt/error.hpp"
#include "otadapt/quadrature.hpp"

namespace otadapt {

namespace {

// Direct product-form Lagrange evaluation; stable and cheap for k <= 8.
void lagrange_1d(const std::vector<double>& x, double t, double* values) {
  const int n = static_cast<int>(x.size());
  for (int j = 0; j < n; ++j) {
    double v = 1.0;
    for (int m = 0; m < n; ++m) {
      if (m == j) continue;
      v *= (t - x[m]) / (x[j] - x[m]);
    }
    values[j] = v;
  }
}

void lagrange_1d_deriv(const std::vector<double>& x, double t, double* values,
                       double* derivs) {
  const int n = static_cast<int>(x.size());
  lagrange_1d(x, t, values);
  for (int j = 0; j < n; ++j) {
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      double prod = 1.0 / (x[j] - x[i]);
      for (int m = 0; m < n; ++m) {
        if (m == j || m == i) continue;
        prod *= (t - x[m]) / (x[j] - x[m]);
      }
      d += prod;
    }
    derivs[j] = d;
  }
}

}  // namespace

MasterElement::MasterElement(int degree) : degree_(degree) {
  if (degree < 1 || degree > 8)
    throw Error("MasterElement: degree must be in [1, 8], got " +
                std::to_string(degree));
  const int n1 = degree + 1;
  node_count_ = n1 * n1;
  nodes_1d_ = gauss_lobatto_nodes(n1);

  nodes_.resize(node_count_);
  for (int b = 0; b < n1; ++b)
    for (int a = 0; a < n1; ++a)
      nodes_[b * n1 + a] = {nodes_1d_[a], nodes_1d_[b]};

  const Rule1D rule = gauss_legendre(degree + 2);
  const int q1 = rule.size();
  quad_count_ = q1 * q1;
  quad_points_.resize(quad_count_);
  quad_weights_.resize(quad_count_);
  for (int b = 0; b < q1; ++b)
    for (int a = 0; a < q1; ++a) {
      quad_points_[b * q1 + a] = {rule.nodes[a], rule.nodes[b]};
      quad_weights_[b * q1 + a] = rule.weights[a] * rule.weights[b];
    }

  basis_at_quad_.resize(quad_count_, node_count_);
  dxi_at_quad_.resize(quad_count_, node_count_);
  deta_at_quad_.resize(quad_count_, node_count_);
  std::vector<double> v(node_count_), dx(node_count_), dy(node_count_);
  for (int g = 0; g < quad_count_; ++g) {
    eval_basis_grad(quad_points_[g][0], quad_points_[g][1], v.data(), dx.data(),
                    dy.data());
    for (int j = 0; j < node_count_; ++j) {
      basis_at_quad_(g, j) = v[j];
      dxi_at_quad_(g, j) = dx[j];
      deta_at_quad_(g, j) = dy[j];
    }
  }

  // Modal basis ordered by total degree, then first-variable order.
  for (int total = 0; total <= 2 * degree; ++total)
    for (int i = 0; i <= degree; ++i) {
      const int j = total - i;
      if (j < 0 || j > degree) continue;
      modal_orders_.push_back({i, j});
    }
  vandermonde_.resize(node_count_, node_count_);
  for (int n = 0; n < node_count_; ++n)
    for (int m = 0; m < node_count_; ++m)
      vandermonde_(n, m) = legendre_orthonormal(modal_orders_[m][0], nodes_[n][0]) *
                           legendre_orthonormal(modal_orders_[m][1], nodes_[n][1]);
  vandermonde_lu_.compute(vandermonde_);

  dxi_at_nodes_.resize(node_count_, node_count_);
  deta_at_nodes_.resize(node_count_, node_count_);
  for (int n = 0; n < node_count_; ++n) {
    eval_basis_grad(nodes_[n][0], nodes_[n][1], v.data(), dx.data(), dy.data());
    for (int j = 0; j < node_count_; ++j) {
      dxi_at_nodes_(n, j) = dx[j];
      deta_at_nodes_(n, j) = dy[j];
    }
  }

  const int k = degree;
  for (int i = 0; i <= k; ++i) {
    face_nodes_[0].push_back(0 * n1 + i);
    face_nodes_[1].push_back(i * n1 + k);
    face_nodes_[2].push_back(k * n1 + (k - i));
    face_nodes_[3].push_back((k - i) * n1 + 0);
  }
}

void MasterElement::eval_basis(double xi, double eta, double* values) const {
  const int n1 = degree_ + 1;
  std::vector<double> lx(n1), ly(n1);
  lagrange_1d(nodes_1d_, xi, lx.data());
  lagrange_1d(nodes_1d_, eta, ly.data());
  for (int b = 0; b < n1; ++b)
    for (int a = 0; a < n1; ++a) values[b * n1 + a] = lx[a] * ly[b];
}

void MasterElement::eval_basis_grad(double xi, double eta, double* values,
                                    double* dxi, double* deta) const {
  const int n1 = degree_ + 1;
  std::vector<double> lx(n1), ly(n1), dlx(n1), dly(n1);
  lagrange_1d_deriv(nodes_1d_, xi, lx.data(), dlx.data());
  lagrange_1d_deriv(nodes_1d_, eta, ly.data(), dly.data());
  for (int b = 0; b < n1; ++b)
    for (int a = 0; a < n1; ++a) {
      const int j = b * n1 + a;
      values[j] = lx[a] * ly[b];
      dxi[j] = dlx[a] * ly[b];
      deta[j] = lx[a] * dly[b];
    }
}

Eigen::VectorXd MasterElement::nodal_to_modal(const Eigen::VectorXd& nodal) const {
  return vandermonde_lu_.solve(nodal);
}

Eigen::VectorXd MasterElement::modal_to_nodal(const Eigen::VectorXd& modal) const {
  return vandermonde_ * modal;
}

Eigen::VectorXd MasterElement::truncate_modal(Eigen::VectorXd modal,
                                              int max_degree) const {
  for (int m = 0; m < node_count_; ++m)
    if (modal_orders_[m][0] > max_degree || modal_orders_[m][1] > max_degree)
      modal[m] = 0.0;
  return modal;
}

double MasterElement::eval_modal(const Eigen::VectorXd& modal, double xi,
                                 double eta) const {
  // One recurrence pass per direction, then combine.
  const int n1 = degree_ + 1;
  double px[9], py[9];
  px[0] = py[0] = std::sqrt(0.5);
  if (degree_ >= 1) {
    px[1] = std::sqrt(1.5) * xi;
    py[1] = std::sqrt(1.5) * eta;
  }
  double p0x = 1.0, p1x = xi, p0y = 1.0, p1y = eta;
  for (int m = 2; m < n1; ++m) {
    const double p2x = ((2.0 * m - 1.0) * xi * p1x - (m - 1.0) * p0x) / m;
    const double p2y = ((2.0 * m - 1.0) * eta * p1y - (m - 1.0) * p0y) / m;
    const double scale = std::sqrt((2.0 * m + 1.0) / 2.0);
    px[m] = scale * p2x;
    py[m] = scale * p2y;
    p0x = p1x;
    p1x = p2x;
    p0y = p1y;
    p1y = p2y;
  }
  double value = 0.0;
  for (int m = 0; m < node_count_; ++m)
    value += modal[m] * px[modal_orders_[m][0]] * py[modal_orders_[m][1]];
  return value;
}

MasterElement::InverseMapResult MasterElement::try_inverse_map(
    const double* elem_coords, double x, double y, int max_newton) const {
  // Element scale for the convergence test.
  double h = 0.0;
  for (int j = 1; j < node_count_; ++j)
    h = std::max(h, std::hypot(elem_coords[2 * j] - elem_coords[0],
                               elem_coords[2 * j + 1] - elem_coords[1]));
  if (h == 0.0) h = 1.0;
  const double tol = 1e-12 * h;

  std::vector<double> v(node_count_), dxi(node_count_), deta(node_count_);

  auto newton = [&](double xi, double eta, InverseMapResult& out) {
    for (int it = 1; it <= max_newton; ++it) {
      eval_basis_grad(xi, eta, v.data(), dxi.data(), deta.data());
      double fx = -x, fy = -y;
      double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
      for (int j = 0; j < node_count_; ++j) {
        const double cx = elem_coords[2 * j], cy = elem_coords[2 * j + 1];
        fx += cx * v[j];
        fy += cy * v[j];
        j11 += cx * dxi[j];
        j12 += cx * deta[j];
        j21 += cy * dxi[j];
        j22 += cy * deta[j];
      }
      out.iterations = it;
      if (std::hypot(fx, fy) <= tol) {
        out.xi = xi;
        out.eta = eta;
        out.converged = true;
        return;
      }
      const double det = j11 * j22 - j12 * j21;
      if (std::abs(det) < 1e-300) return;
      const double dxi_step = (j22 * fx - j12 * fy) / det;
      const double deta_step = (-j21 * fx + j11 * fy) / det;
      xi -= dxi_step;
      eta -= deta_step;
      // Keep the iterate from running away on far-outside queries.
      xi = std::clamp(xi, -10.0, 10.0);
      eta = std::clamp(eta, -10.0, 10.0);
    }
    out.xi = xi;
    out.eta = eta;
  };

  InverseMapResult result;
  newton(0.0, 0.0, result);
  if (!result.converged) {
    // Fall back to the closest nodal point as initial guess.
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (int j = 0; j < node_count_; ++j) {
      const double d = std::hypot(elem_coords[2 * j] - x, elem_coords[2 * j + 1] - y);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    InverseMapResult retry;
    newton(nodes_[best][0], nodes_[best][1], retry);
    retry.iterations += result.iterations;
    result = retry;
  }
  constexpr double eps = 1e-8;
  result.inside = result.converged && std::abs(result.xi) <= 1.0 + eps &&
                  std::abs(result.eta) <= 1.0 + eps;
  return result;
}

MasterElement::InverseMapResult MasterElement::inverse_map(
    const double* elem_coords, double x, double y, int max_newton) const {
  InverseMapResult result = try_inverse_map(elem_coords, x, y, max_newton);
  if (!result.converged)
    throw NoConvergence("inverse_map: Newton did not converge at point (" +
                        std::to_string(x) + ", " + std::to_string(y) + ")");
  return result;
}

void MasterElement::face_ref_point(int f, double t, double& xi, double& eta) {
  switch (f) {
    case 0: xi = t; eta = -1.0; break;
    case 1: xi = 1.0; eta = t; break;
    case 2: xi = -t; eta = 1.0; break;
    default: xi = -1.0; eta = -t; break;
  }
}

void MasterElement::eval_basis_1d(double t, double* values) const {
  lagrange_1d(nodes_1d_, t, values);
}

void MasterElement::eval_basis_1d_deriv(double t, double* values,
                                        double* derivs) const {
  lagrange_1d_deriv(nodes_1d_, t, values, derivs);
}

}  // namespace otadapt
