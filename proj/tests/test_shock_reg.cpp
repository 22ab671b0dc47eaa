#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "otadapt/error.hpp"
#include "otadapt/mesh.hpp"
#include "otadapt/presets.hpp"
#include "otadapt/quadrature.hpp"
#include "otadapt/shock_reg.hpp"
#include "support/oracles.hpp"

using namespace otadapt;

TEST_CASE("mu_ramp closed-form values") {
  const double pi = std::acos(-1.0);
  // At the threshold: mu = 1/2 - arctan(100)/pi.
  CHECK(mu_ramp(0.2, 0.2) ==
        doctest::Approx(0.5 - std::atan(100.0) / pi).epsilon(1e-14));
  CHECK(mu_ramp(0.2, 0.2) == doctest::Approx(0.003183).epsilon(1e-3));
  CHECK(std::abs(mu_ramp(0.2, 0.2) - 0.003183) < 1e-6);
  // Top of the ramp: ~ 1 - eta_T.
  CHECK(std::abs(mu_ramp(1.0, 0.2) - 0.8) < 1e-5);
  // Below the threshold the ramp is numerically zero. The closed form gives
  // (atan(1/100) - 0.2 atan(1/20)) / pi = +2.54e-6.
  const double mu0 = (std::atan(0.01) - 0.2 * std::atan(0.05)) / pi;
  CHECK(mu_ramp(0.0, 0.2) == doctest::Approx(mu0).epsilon(1e-12));
  CHECK(std::abs(mu_ramp(0.0, 0.2)) < 1e-5);
}

TEST_CASE("mu_ramp is monotone nondecreasing on a fine grid") {
  double prev = mu_ramp(0.0, 0.2);
  for (int i = 1; i <= 10000; ++i) {
    const double eta = i / 10000.0;
    const double value = mu_ramp(eta, 0.2);
    CHECK(value >= prev - 1e-14);
    prev = value;
  }
  // Range stays within [0, 1 - eta_T] up to the smoothing width.
  CHECK(prev <= 0.8 + 1e-4);
}

TEST_CASE("av_field handles the degenerate zero sensor") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 3, 3, 2);
  const ScalarFieldDG eta(mesh);
  bool degenerate = false;
  const ScalarFieldDG av = av_field(eta, 0.7, 0.2, &degenerate);
  CHECK(degenerate);
  CHECK(av.max_abs_nodal() == 0.0);
}

TEST_CASE("av_field peak equals lambda1 mu(1)") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 4, 4, 2);
  ScalarFieldDG eta(mesh);
  eta.at(5, 3) = 1.0;  // concentrated sensor
  const ScalarFieldDG av = av_field(eta, 0.1, 0.2);
  CHECK(std::abs(av.max_nodal() - 0.08) < 1e-5);
}

TEST_CASE("av_field is invariant under positive scaling of eta") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 4, 4, 3);
  const auto eta = ScalarFieldDG::from_function(mesh, [](double x, double y) {
    return std::exp(-10 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
  });
  ScalarFieldDG scaled = eta;
  for (auto& c : scaled.coeffs()) c *= 421.7;
  const ScalarFieldDG a = av_field(eta, 0.3, 0.2);
  const ScalarFieldDG b = av_field(scaled, 0.3, 0.2);
  for (size_t i = 0; i < a.coeffs().size(); ++i)
    CHECK(a.coeffs()[i] == doctest::Approx(b.coeffs()[i]).epsilon(1e-12));
}

TEST_CASE("shock element set selection") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 4, 4, 2);
  const auto ones = ScalarFieldDG::from_function(mesh, [](double, double) {
    return 1.0;
  });
  CHECK(shock_elements(ones, 0.2).size() == 16);
  const ScalarFieldDG zeros(mesh);
  CHECK(shock_elements(zeros, 0.2).empty());

  // Elementwise 0.5 on the left half, 0 on the right: after normalization the
  // left half integrates to |K| >= 0.2 |K| and the right half to 0.
  ScalarFieldDG half(mesh);
  for (int e = 0; e < mesh.elem_count(); ++e)
    if (e % 4 < 2)
      for (int j = 0; j < mesh.nodes_per_elem(); ++j) half.at(e, j) = 0.5;
  const auto set = shock_elements(half, 0.2);
  CHECK(set.size() == 8);
  for (int e : set) CHECK(e % 4 < 2);
}

TEST_CASE("shock sets grow monotonically with the sensor") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 5, 5, 2);
  const auto low = ScalarFieldDG::from_function(mesh, [](double x, double y) {
    return std::exp(-8 * ((x - 0.3) * (x - 0.3) + y * y));
  });
  ScalarFieldDG high = low;
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j)
      high.at(e, j) = std::min(1.0, high.at(e, j) + 0.2 * (e % 3 == 0));
  // Normalize comparison: eta_low <= eta_high nodewise and max = 1 for both.
  const double ml = low.max_abs_nodal(), mh = high.max_abs_nodal();
  ScalarFieldDG ln = low, hn = high;
  for (auto& c : ln.coeffs()) c /= ml;
  for (auto& c : hn.coeffs()) c /= mh;
  bool dominated = true;
  for (size_t i = 0; i < ln.coeffs().size(); ++i)
    if (ln.coeffs()[i] > hn.coeffs()[i] + 1e-12) dominated = false;
  if (dominated) {
    const auto sl = shock_elements(low, 0.2);
    const auto sh = shock_elements(high, 0.2);
    for (int e : sl) CHECK(std::find(sh.begin(), sh.end(), e) != sh.end());
  }
}

TEST_CASE("homotopy schedule reproduces the hand-computed sequence") {
  HomotopyState state{1, 1.0, 1.5, 0.8};
  CHECK(state.lambda1 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(state.lambda2 == doctest::Approx(1.5).epsilon(1e-15));
  state = homotopy_step(state);
  CHECK(state.n == 2);
  CHECK(std::abs(state.lambda1 - 0.8) < 1e-12);
  CHECK(std::abs(state.lambda2 - 1.4) < 1e-12);
  state = homotopy_step(state);
  CHECK(std::abs(state.lambda1 - 0.512) < 1e-12);
  CHECK(std::abs(state.lambda2 - 1.256) < 1e-12);
}

TEST_CASE("homotopy closed form lambda1 = lambda01 zeta^(n(n-1)/2)") {
  HomotopyState state{1, 2.0, 5.0, 0.7};
  for (int n = 1; n <= 8; ++n) {
    const double closed = 2.0 * std::pow(0.7, n * (n - 1) / 2.0);
    CHECK(state.lambda1 == doctest::Approx(closed).epsilon(1e-12));
    state = homotopy_step(state);
  }
}

TEST_CASE("zeta -> 1 freezes the schedule; lambda2 decreases toward one") {
  HomotopyState frozen{1, 3.0, 2.0, 1.0 - 1e-15};
  for (int n = 0; n < 5; ++n) frozen = homotopy_step(frozen);
  CHECK(frozen.lambda1 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(frozen.lambda2 == doctest::Approx(2.0).epsilon(1e-12));

  HomotopyState state{1, 1.0, 5.0, 0.8};
  double prev2 = state.lambda2;
  for (int n = 0; n < 30; ++n) {
    state = homotopy_step(state);
    CHECK(state.lambda2 >= 1.0);
    CHECK(state.lambda2 <= prev2 + 1e-15);
    prev2 = state.lambda2;
  }
  CHECK(state.lambda2 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("constraint checks: positivity") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 3, 3, 2);
  const StateFieldDG good = make_uniform_state(mesh, {});
  const auto eta = ScalarFieldDG::from_function(mesh, [](double, double) {
    return 1.0;
  });
  const auto pass = check_constraints(good, eta, 0.0, 5.0, XiChoice::density);
  CHECK(pass.pass);

  StateFieldDG bad = good;
  bad.at(4, 2, 0) = -1.0;
  const auto fail = check_constraints(bad, eta, 0.0, 5.0, XiChoice::density);
  CHECK_FALSE(fail.pass);
  CHECK(fail.reason == ConstraintVerdict::Reason::density);
  CHECK(fail.element == 4);

  StateFieldDG cold = good;
  cold.at(2, 1, 3) = 1e-6;  // energy below kinetic -> negative pressure
  const auto fail_p = check_constraints(cold, eta, 0.0, 5.0, XiChoice::density);
  CHECK_FALSE(fail_p.pass);
  CHECK(fail_p.reason == ConstraintVerdict::Reason::pressure);
}

TEST_CASE("constraint checks: smoothness against the baseline") {
  const int k = 3;
  const Mesh mesh = structured_rect(-1, -1, 1, 1, 1, 1, k);
  const auto eta = ScalarFieldDG::from_function(mesh, [](double, double) {
    return 1.0;
  });
  auto oscillatory = [&](double amp) {
    return StateFieldDG::from_function(mesh, [&, amp](double x, double) {
      double p, dp;
      legendre_eval(k, x, p, dp);
      return std::array<double, 4>{1.0 + amp * p, 0.0, 0.0, 10.0};
    });
  };
  // Baseline sigma from a mild top mode; a 10x bigger one violates C0 = 5.
  const auto base = check_constraints(oscillatory(0.02), eta,
                                      std::numeric_limits<double>::max(), 5.0,
                                      XiChoice::density);
  REQUIRE(base.pass);
  const double sigma0 = base.value;
  CHECK(sigma0 > 0.0);
  const auto ok = check_constraints(oscillatory(0.02), eta, sigma0, 5.0,
                                    XiChoice::density);
  CHECK(ok.pass);
  const auto violated = check_constraints(oscillatory(0.25), eta, sigma0, 5.0,
                                          XiChoice::density);
  CHECK_FALSE(violated.pass);
  CHECK(violated.reason == ConstraintVerdict::Reason::smoothness);
}

TEST_CASE("eta_solve of uniform flow is nearly zero") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 6, 6, 2);
  const StateFieldDG state = make_uniform_state(mesh, {});
  const ScalarFieldDG eta = eta_solve(mesh, state, 1.5, mesh.h_min(), {});
  CHECK(eta.max_abs_nodal() < 1e-6);
}

TEST_CASE("eta_solve of a uniform compression is the constant source") {
  const Mesh mesh = structured_rect(-0.5, -0.5, 0.5, 0.5, 5, 5, 2);
  const StateFieldDG state = StateFieldDG::from_function(
      mesh, [](double x, double) {
        return std::array<double, 4>{1.0, -x, 0.0, 10.0};
      });
  // S = 1 and s = g(1) with clip 0.5: eta solves the all-Neumann Helmholtz
  // problem with constant source, hence equals it.
  const ScalarFieldDG eta = eta_solve(mesh, state, 1.5, mesh.h_min(), {});
  for (double v : eta.coeffs()) CHECK(v == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("lambda2 widens the eta support") {
  const double delta = 0.04;
  const Mesh mesh = structured_rect(0, 0, 1, 0.25, 48, 6, 2);
  const StateFieldDG state = StateFieldDG::from_function(
      mesh, [&](double x, double) {
        const double v1 = 0.5 * (1.0 - std::tanh((x - 0.5) / delta));
        return std::array<double, 4>{1.0, v1, 0.0, 10.0};
      });
  auto support_width = [&](double lambda2) {
    const ScalarFieldDG eta = eta_solve(mesh, state, lambda2, mesh.h_min(), {});
    const double norm = eta.max_abs_nodal();
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double x = i / 400.0;
      if (eta.eval(x, 0.125) / norm >= 0.2) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    return hi - lo;
  };
  CHECK(support_width(5.0) > support_width(1.5));
}

TEST_CASE("initial eta vanishes at walls and is one in the interior") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 8, 8, 2);
  auto geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
  const ScalarFieldDG eta = initial_eta(mesh, geometry, {0});  // bottom wall
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j)
      if (std::abs(mesh.coord(e, j, 1)) < 1e-12)
        CHECK(std::abs(eta.at(e, j)) < 1e-12);
  CHECK(eta.eval(0.5, 0.9) == doctest::Approx(1.0).epsilon(1e-6));
  // No walls: identically one.
  const ScalarFieldDG flat = initial_eta(mesh, geometry, {});
  CHECK(flat.min_nodal() == 1.0);
}

TEST_CASE("run_homotopy accepts the last constraint-satisfying state") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 6, 6, 2);
  HomotopyParams params;
  params.max_steps = 10;
  // States stay fine until step 4, which turns non-positive.
  const HomotopyResult result = run_homotopy(
      mesh,
      [&](int n) {
        StateFieldDG state = make_tanh_shock_state(mesh, {});
        if (n >= 4)
          for (int j = 0; j < mesh.nodes_per_elem(); ++j) state.at(0, j, 0) = -1.0;
        return state;
      },
      params);
  CHECK(result.accepted_n == 3);
  CHECK(result.trace.size() == 4);
  CHECK(result.trace.back().verdict.pass == false);
  CHECK(result.trace[0].lambda1 == doctest::Approx(1.0));
  CHECK(result.trace[1].lambda1 == doctest::Approx(0.8));
  CHECK(result.trace[2].lambda1 == doctest::Approx(0.512).epsilon(1e-12));
}

TEST_CASE("run_homotopy runs out the schedule when nothing violates") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 4, 4, 2);
  HomotopyParams params;
  params.max_steps = 5;
  const HomotopyResult result = run_homotopy(
      mesh, [&](int) { return make_uniform_state(mesh, {}); }, params);
  CHECK(result.accepted_n == 5);
  CHECK(result.trace.size() == 5);
  for (const auto& t : result.trace) CHECK(t.verdict.pass);
}
