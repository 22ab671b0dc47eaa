#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "otadapt/error.hpp"
#include "otadapt/fields.hpp"
#include "otadapt/io.hpp"
#include "otadapt/mesh.hpp"
#include "support/oracles.hpp"

using namespace otadapt;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("single element unit square") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 1, 1, 1);
  CHECK(mesh.elem_count() == 1);
  CHECK(mesh.nodes_per_elem() == 4);
  CHECK(mesh.validate().ok);
  const std::string path = temp_path("single.otm");
  save_mesh(mesh, path);
  const Mesh loaded = load_mesh(path);
  CHECK(loaded.elem_count() == 1);
  for (int j = 0; j < 4; ++j) {
    CHECK(loaded.coord(0, j, 0) == mesh.coord(0, j, 0));
    CHECK(loaded.coord(0, j, 1) == mesh.coord(0, j, 1));
  }
}

TEST_CASE("channel mesh bounding box") {
  const Mesh mesh = structured_rect(0, 0, 3, 1, 12, 4, 2);
  const auto box = mesh.bbox();
  CHECK(box[0] == doctest::Approx(0.0));
  CHECK(box[1] == doctest::Approx(0.0));
  CHECK(box[2] == doctest::Approx(3.0));
  CHECK(box[3] == doctest::Approx(1.0));
  const std::string path = temp_path("channel.otm");
  save_mesh(mesh, path);
  const Mesh loaded = load_mesh(path);
  CHECK(loaded.bbox()[2] == doctest::Approx(3.0));
  CHECK(loaded.area() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("save/load round trip preserves coordinates exactly") {
  const Mesh mesh = structured_annulus(0.5, 1.0, 3, 16, 3);
  const std::string path = temp_path("annulus.otm");
  save_mesh(mesh, path);
  const Mesh loaded = load_mesh(path);
  REQUIRE(loaded.elem_count() == mesh.elem_count());
  for (size_t i = 0; i < mesh.coords().size(); ++i)
    CHECK(loaded.coords()[i] == mesh.coords()[i]);  // %.17g survives bit-exactly
}

TEST_CASE("malformed files raise ParseError with line numbers") {
  const std::string path = temp_path("bad.otm");
  {
    std::ofstream out(path);
    out << "otm 1 1 2 4\n";
    out << "0 0 1 0 0 1 1 1\n";
    out << "1 0 2 0 1 1 2 1\n";
    out << "faces 1\n";
    out << "0 1 7 3\n";  // element 7 out of range
  }
  CHECK_THROWS_AS(load_mesh(path), ParseError);
  try {
    load_mesh(path);
  } catch (const ParseError& e) {
    CHECK(e.line_number == 5);
  }
  {
    std::ofstream out(path);
    out << "not_a_mesh\n";
  }
  CHECK_THROWS_AS(load_mesh(path), ParseError);
}

TEST_CASE("comments and blank lines are skipped in mesh files") {
  const std::string path = temp_path("commented.otm");
  {
    std::ofstream out(path);
    out << "# a hand-written single element\n";
    out << "otm 1 1 1 4\n\n";
    out << "0 0  1 0  0 1  1 1   # coordinates\n";
    out << "faces 4\n";
    out << "0 0 -1 0\n0 1 -1 1\n0 2 -1 2\n0 3 -1 3\n";
  }
  const Mesh mesh = load_mesh(path);
  CHECK(mesh.elem_count() == 1);
  CHECK(mesh.faces().size() == 4);
}

TEST_CASE("h_min on uniform grids") {
  for (int n : {4, 8}) {
    const Mesh mesh1 = structured_rect(0, 0, 1, 1, n, n, 1);
    CHECK(mesh1.h_min() == doctest::Approx(1.0 / n).epsilon(1e-12));
    // k = 2 Gauss-Lobatto nodes split each edge in half.
    const Mesh mesh2 = structured_rect(0, 0, 1, 1, n, n, 2);
    CHECK(mesh2.h_min() == doctest::Approx(0.5 / n).epsilon(1e-12));
    // k = 3: smallest gap is (1 - 1/sqrt(5))/2 in reference units.
    const Mesh mesh3 = structured_rect(0, 0, 1, 1, n, n, 3);
    const double gap = 0.5 * (1.0 - 1.0 / std::sqrt(5.0)) / n;
    CHECK(mesh3.h_min() == doctest::Approx(gap).epsilon(1e-12));
  }
}

TEST_CASE("stretched grid exposes the thin row") {
  const double delta = 0.01;
  const Mesh mesh = stretched_rect(0, 0, 1, 1, 4, 5, delta, 1);
  CHECK(mesh.h_min() <= delta + 1e-14);
  CHECK(mesh.validate().ok);
}

TEST_CASE("jacobians of the unit square element") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 1, 1, 2);
  const auto geom = mesh.jacobians(0);
  for (int g = 0; g < mesh.master().quad_count(); ++g)
    CHECK(geom.det_j[g] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("swapped corners are flagged invalid") {
  std::vector<double> coords{0, 0, 1, 0, 0, 1, 1, 1};
  std::swap(coords[0], coords[2]);
  std::swap(coords[1], coords[3]);
  std::vector<MeshFace> faces;
  for (int f = 0; f < 4; ++f) faces.push_back({0, f, -1, -1, 0});
  const Mesh mesh(1, coords, faces);
  const auto report = mesh.validate();
  CHECK_FALSE(report.ok);
  CHECK(report.errors.front().element == 0);
}

TEST_CASE("curved quarter-annulus Jacobian matches the polar form") {
  const double r0 = 1.0, r1 = 2.0;
  const double pi = std::acos(-1.0);
  const Mesh mesh = structured_annulus(r0, r1, 1, 1, 6, 0.0, 0.5 * pi);
  REQUIRE(mesh.elem_count() == 1);
  const auto geom = mesh.jacobians(0);
  const auto& master = mesh.master();
  for (int g = 0; g < master.quad_count(); ++g) {
    // Radius is affine in the reference coordinate, so it is represented
    // exactly; the angular cos/sin map carries the interpolation error.
    const double r = r0 + (r1 - r0) * 0.5 * (master.quad_points()[g][1] + 1.0);
    const double exact = r * 0.5 * (r1 - r0) * 0.5 * (0.5 * pi);
    CHECK(geom.det_j[g] == doctest::Approx(exact).epsilon(1e-4));
    CHECK(geom.det_j[g] > 0.0);
  }
}

TEST_CASE("area matches analytic domain area") {
  CHECK(structured_rect(0, 0, 1, 1, 7, 5, 3).area() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(structured_rect(0, 0, 3, 1, 9, 3, 2).area() ==
        doctest::Approx(3.0).epsilon(1e-12));
  const Mesh ramp = ramp_channel(0.5, 1.0, 1.5, 1.5, 25, 37, 2, 2, 2, 4, 2);
  const double y2 = 0.5 * std::tan(25 * std::acos(-1.0) / 180);
  const double y3 = y2 + 0.5 * std::tan(37 * std::acos(-1.0) / 180);
  const double cut = 0.5 * 0.5 * y2 + 0.5 * (y2 + y3) * 0.5;  // under the ramps
  CHECK(ramp.area() == doctest::Approx(1.5 * 1.5 - cut).epsilon(1e-12));
}

TEST_CASE("locate_point at cell centers and on shared edges") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 4, 4, 2);
  const auto loc = mesh.locate_point(0.375, 0.625);  // center of cell (1, 2)
  CHECK(loc.elem == 2 * 4 + 1);
  CHECK(loc.xi == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(loc.eta == doctest::Approx(0.0).epsilon(1e-10));
  CHECK_FALSE(loc.extrapolated);

  // Continuous field evaluated on a shared edge agrees from either side.
  const auto field = ScalarFieldDG::from_function(
      mesh, [](double x, double y) { return 2 * x - 3 * y; });
  const double on_edge = field.eval(0.25, 0.4);
  CHECK(on_edge == doctest::Approx(2 * 0.25 - 3 * 0.4).epsilon(1e-10));
}

TEST_CASE("locate_point outside behavior") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 4, 4, 2);
  const auto near = mesh.locate_point(-1e-8, 0.5);
  CHECK(near.extrapolated);
  CHECK(near.xi >= -1.0);
  CHECK_THROWS_AS(mesh.locate_point(-0.1, 0.5), NotFound);
  const auto clamped = mesh.locate_clamped(-0.1, 0.5);
  CHECK(clamped.extrapolated);
  CHECK(clamped.elem >= 0);
}

TEST_CASE("locate_point is consistent with the forward map") {
  const Mesh mesh = structured_annulus(0.7, 1.5, 4, 24, 3);
  for (int trial = 0; trial < 150; ++trial) {
    const double r = oracles::uniform(0.701, 1.499);
    const double th = oracles::uniform(0.0, 6.28);
    const double x = r * std::cos(th), y = r * std::sin(th);
    const auto loc = mesh.locate_point(x, y);
    CHECK_FALSE(loc.extrapolated);
    const auto p = mesh.forward_map(loc.elem, loc.xi, loc.eta);
    CHECK(std::hypot(p[0] - x, p[1] - y) < 1e-9 * mesh.diameter());
  }
}

TEST_CASE("shared-node classes are consistent") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 3, 3, 2);
  // 7x7 distinct node positions over the 3x3 grid of degree-2 elements.
  CHECK(mesh.class_count() == 49);
  for (int c = 0; c < mesh.class_count(); ++c) {
    const auto& members = mesh.class_members(c);
    for (auto [e, j] : members) {
      CHECK(std::abs(mesh.coord(e, j, 0) -
                     mesh.coord(members[0].first, members[0].second, 0)) < 1e-12);
      CHECK(mesh.node_class(e, j) == c);
    }
  }
}

TEST_CASE("vtk export writes a legacy unstructured grid") {
  const Mesh mesh = structured_rect(0, 0, 1, 1, 2, 2, 2);
  const auto field = ScalarFieldDG::from_function(
      mesh, [](double x, double y) { return x + y; });
  const std::string path = temp_path("mesh.vtk");
  export_vtk(mesh, path, {&field}, {"sum"});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# vtk DataFile Version 2.0");
  bool has_dataset = false, has_points = false, has_scalars = false;
  while (std::getline(in, line)) {
    if (line.find("DATASET UNSTRUCTURED_GRID") == 0) has_dataset = true;
    if (line.find("POINTS") == 0) has_points = true;
    if (line.find("SCALARS sum") == 0) has_scalars = true;
  }
  CHECK(has_dataset);
  CHECK(has_points);
  CHECK(has_scalars);
}
