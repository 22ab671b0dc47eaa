#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "otadapt/error.hpp"
#include "otadapt/master_element.hpp"
#include "otadapt/quadrature.hpp"
#include "support/oracles.hpp"

using namespace otadapt;

TEST_CASE("node and quadrature counts") {
  const MasterElement me1(1);
  CHECK(me1.node_count() == 4);
  CHECK(me1.quad_count() == 9);
  for (const auto& node : me1.nodes())
    CHECK(std::abs(node[0]) == doctest::Approx(1.0));

  const MasterElement me4(4);
  CHECK(me4.node_count() == 25);
  CHECK(me4.quad_count() == 36);

  CHECK_THROWS_AS(MasterElement(0), Error);
  CHECK_THROWS_AS(MasterElement(9), Error);
}

TEST_CASE("quadrature weights sum to the reference area") {
  for (int k = 1; k <= 8; ++k) {
    const MasterElement me(k);
    double sum = 0.0;
    for (double w : me.quad_weights()) sum += w;
    CHECK(sum == doctest::Approx(4.0).epsilon(1e-13));
  }
}

TEST_CASE("quadrature integrates xi^2 and high powers") {
  for (int k = 1; k <= 8; ++k) {
    const MasterElement me(k);
    double integral = 0.0;
    for (int g = 0; g < me.quad_count(); ++g)
      integral += me.quad_weights()[g] * me.quad_points()[g][0] * me.quad_points()[g][0];
    CHECK(integral == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  }
  // k = 3 rule has 5 points per direction: exact through degree 9.
  const MasterElement me(3);
  double odd = 0.0, even = 0.0;
  for (int g = 0; g < me.quad_count(); ++g) {
    const double x = me.quad_points()[g][0];
    odd += me.quad_weights()[g] * std::pow(x, 9);
    even += me.quad_weights()[g] * std::pow(x, 8);
  }
  CHECK(std::abs(odd) < 1e-14);
  // Brute-force high-order oracle plus the analytic value 2/9 * 2.
  const double oracle = [] {
    const Rule1D rule = gauss_legendre(20);
    double v = 0.0;
    for (int i = 0; i < rule.size(); ++i)
      v += rule.weights[i] * std::pow(rule.nodes[i], 8);
    return 2.0 * v;
  }();
  CHECK(even == doctest::Approx(4.0 / 9.0).epsilon(1e-13));
  CHECK(even == doctest::Approx(oracle).epsilon(1e-13));
}

TEST_CASE("Kronecker property at nodes") {
  const MasterElement me1(1);
  std::vector<double> v(me1.node_count());
  me1.eval_basis(-1.0, -1.0, v.data());
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(std::abs(v[1]) < 1e-14);
  CHECK(std::abs(v[2]) < 1e-14);
  CHECK(std::abs(v[3]) < 1e-14);

  const MasterElement me2(2);
  v.resize(me2.node_count());
  me2.eval_basis(0.0, 0.0, v.data());
  for (int j = 0; j < me2.node_count(); ++j)
    CHECK(v[j] == doctest::Approx(j == 4 ? 1.0 : 0.0).epsilon(1e-13));

  for (int k : {3, 5}) {
    const MasterElement me(k);
    v.resize(me.node_count());
    for (int i = 0; i < me.node_count(); ++i) {
      me.eval_basis(me.nodes()[i][0], me.nodes()[i][1], v.data());
      for (int j = 0; j < me.node_count(); ++j)
        CHECK(v[j] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("partition of unity at random points") {
  for (int k = 1; k <= 6; ++k) {
    const MasterElement me(k);
    std::vector<double> v(me.node_count());
    for (int trial = 0; trial < 100; ++trial) {
      const double xi = oracles::uniform(-1.0, 1.0);
      const double eta = oracles::uniform(-1.0, 1.0);
      me.eval_basis(xi, eta, v.data());
      double sum = 0.0;
      for (double value : v) sum += value;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("inverse map on the unit square and at nodes") {
  const MasterElement me(1);
  // Corner-node ordering of the unit square.
  const std::vector<double> coords{0, 0, 1, 0, 0, 1, 1, 1};
  const auto center = me.inverse_map(coords.data(), 0.5, 0.5);
  CHECK(center.inside);
  CHECK(center.xi == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(center.eta == doctest::Approx(0.0).epsilon(1e-12));

  const MasterElement me3(3);
  std::vector<double> curved(me3.node_count() * 2);
  for (int j = 0; j < me3.node_count(); ++j) {
    const double xi = me3.nodes()[j][0], eta = me3.nodes()[j][1];
    curved[2 * j] = xi + 0.05 * std::sin(eta);
    curved[2 * j + 1] = eta + 0.08 * xi * xi;
  }
  for (int j = 0; j < me3.node_count(); ++j) {
    const auto r = me3.inverse_map(curved.data(), curved[2 * j], curved[2 * j + 1]);
    CHECK(r.xi == doctest::Approx(me3.nodes()[j][0]).epsilon(1e-10));
    CHECK(r.eta == doctest::Approx(me3.nodes()[j][1]).epsilon(1e-10));
  }
}

TEST_CASE("inverse map matches the closed-form affine inverse") {
  const MasterElement me(1);
  for (int trial = 0; trial < 50; ++trial) {
    // Random well-conditioned affine map.
    std::array<double, 4> A{oracles::uniform(0.5, 2.0), oracles::uniform(-0.3, 0.3),
                            oracles::uniform(-0.3, 0.3), oracles::uniform(0.5, 2.0)};
    std::array<double, 2> b{oracles::uniform(-1.0, 1.0), oracles::uniform(-1.0, 1.0)};
    std::vector<double> coords(8);
    for (int j = 0; j < 4; ++j) {
      const double xi = me.nodes()[j][0], eta = me.nodes()[j][1];
      coords[2 * j] = A[0] * xi + A[1] * eta + b[0];
      coords[2 * j + 1] = A[2] * xi + A[3] * eta + b[1];
    }
    const double x = oracles::uniform(-2.0, 2.0), y = oracles::uniform(-2.0, 2.0);
    const auto expect = oracles::affine_inverse(A, b, x, y);
    const auto got = me.inverse_map(coords.data(), x, y);
    CHECK(got.xi == doctest::Approx(expect[0]).epsilon(1e-11));
    CHECK(got.eta == doctest::Approx(expect[1]).epsilon(1e-11));
  }
}

TEST_CASE("inverse map round trip on distorted elements") {
  for (int k : {2, 3, 4}) {
    const MasterElement me(k);
    std::vector<double> coords(me.node_count() * 2);
    for (int j = 0; j < me.node_count(); ++j) {
      const double xi = me.nodes()[j][0], eta = me.nodes()[j][1];
      coords[2 * j] = xi + 0.1 * std::sin(0.5 * eta) + 0.05 * xi * eta;
      coords[2 * j + 1] = eta + 0.07 * std::cos(0.8 * xi);
    }
    std::vector<double> v(me.node_count());
    for (int trial = 0; trial < 100; ++trial) {
      const double xi = oracles::uniform(-0.99, 0.99);
      const double eta = oracles::uniform(-0.99, 0.99);
      me.eval_basis(xi, eta, v.data());
      double x = 0.0, y = 0.0;
      for (int j = 0; j < me.node_count(); ++j) {
        x += coords[2 * j] * v[j];
        y += coords[2 * j + 1] * v[j];
      }
      const auto r = me.inverse_map(coords.data(), x, y);
      CHECK(r.inside);
      me.eval_basis(r.xi, r.eta, v.data());
      double rx = 0.0, ry = 0.0;
      for (int j = 0; j < me.node_count(); ++j) {
        rx += coords[2 * j] * v[j];
        ry += coords[2 * j + 1] * v[j];
      }
      CHECK(std::hypot(rx - x, ry - y) < 1e-10 * std::max(1.0, std::hypot(x, y)));
    }
  }
}

TEST_CASE("inverse map reports NoConvergence when starved of iterations") {
  const MasterElement me(3);
  std::vector<double> coords(me.node_count() * 2);
  for (int j = 0; j < me.node_count(); ++j) {
    const double xi = me.nodes()[j][0], eta = me.nodes()[j][1];
    coords[2 * j] = xi + 0.3 * std::sin(2 * eta);
    coords[2 * j + 1] = eta + 0.3 * std::cos(2 * xi) * xi;
  }
  CHECK_THROWS_AS(me.inverse_map(coords.data(), 50.0, -40.0, 1), NoConvergence);
  const auto soft = me.try_inverse_map(coords.data(), 50.0, -40.0, 1);
  CHECK_FALSE(soft.converged);
}

TEST_CASE("modal transform of a constant") {
  for (int k : {1, 2, 4}) {
    const MasterElement me(k);
    const double c = 3.25;
    Eigen::VectorXd nodal = Eigen::VectorXd::Constant(me.node_count(), c);
    const Eigen::VectorXd modal = me.nodal_to_modal(nodal);
    // Orthonormal basis on [-1,1]^2: psi_00 = 1/2, so the coefficient is 2c.
    CHECK(modal[0] == doctest::Approx(2.0 * c).epsilon(1e-12));
    for (int m = 1; m < me.node_count(); ++m) CHECK(std::abs(modal[m]) < 1e-12);
  }
}

TEST_CASE("modal transform isolates a single Legendre mode") {
  const MasterElement me(3);
  Eigen::VectorXd nodal(me.node_count());
  for (int j = 0; j < me.node_count(); ++j) nodal[j] = me.nodes()[j][0];  // L_1(xi)
  const Eigen::VectorXd modal = me.nodal_to_modal(nodal);
  int nonzero = 0;
  for (int m = 0; m < me.node_count(); ++m)
    if (std::abs(modal[m]) > 1e-12) {
      ++nonzero;
      CHECK(me.modal_orders()[m][0] == 1);
      CHECK(me.modal_orders()[m][1] == 0);
    }
  CHECK(nonzero == 1);
}

TEST_CASE("modal round trip and truncation") {
  for (int k = 1; k <= 6; ++k) {
    const MasterElement me(k);
    Eigen::VectorXd nodal(me.node_count());
    for (int j = 0; j < me.node_count(); ++j) nodal[j] = oracles::uniform(-1.0, 1.0);
    const Eigen::VectorXd back = me.modal_to_nodal(me.nodal_to_modal(nodal));
    CHECK((back - nodal).lpNorm<Eigen::Infinity>() < 1e-12);

    const Eigen::VectorXd trunc = me.truncate_modal(me.nodal_to_modal(nodal), k - 1);
    int kept = 0;
    for (int m = 0; m < me.node_count(); ++m)
      if (std::abs(trunc[m]) > 0.0) {
        CHECK(me.modal_orders()[m][0] <= k - 1);
        CHECK(me.modal_orders()[m][1] <= k - 1);
        ++kept;
      }
    CHECK(kept <= k * k);
  }
}
