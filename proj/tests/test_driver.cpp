#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "otadapt/cli.hpp"
#include "otadapt/config.hpp"
#include "otadapt/driver.hpp"
#include "otadapt/error.hpp"
#include "otadapt/io.hpp"
#include "otadapt/presets.hpp"

using namespace otadapt;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
  const auto path = fs::temp_directory_path() / name;
  fs::remove_all(path);
  fs::create_directories(path);
  return path.string();
}

std::string write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("config parsing covers sections, defaults and errors") {
  const std::string dir = temp_dir("cfg_test");
  const std::string path = write_file(dir + "/run.cfg", R"(otadapt 1
[mesh]
generate = square 12 12 3
[geometry]
preset = rect 0 0 1 1
wall = 0
[state]
preset = tanh-shock
delta = 0.03
[monitor]
option = velocity_divergence
beta = 2.5
smoothing = off
[ma]
tau = 1.5
omega = 0.8
sliding = off
[adapt]
max_iters = 3
tol = 1e-4
[homotopy]
zeta = 0.75
xi = mach
[output]
dir = )" + dir + R"(/out
vtk = off
)");
  const AdaptConfig config = load_config(path);
  CHECK(config.mesh_generate == "square 12 12 3");
  REQUIRE(config.geometry.has_value());
  CHECK(config.geometry->segment_count() == 4);
  CHECK(config.geometry->segment(0).wall);
  CHECK(config.state_preset == "tanh-shock");
  CHECK(config.state_params.at("delta") == 0.03);
  CHECK(config.monitor.option == MonitorConfig::Option::velocity_divergence);
  CHECK(config.monitor.beta == 2.5);
  CHECK_FALSE(config.monitor.smoothing);
  CHECK(config.ma.tau == 1.5);
  CHECK(config.ma.omega == 0.8);
  CHECK_FALSE(config.ma.sliding);
  CHECK(config.max_adapt == 3);
  CHECK(config.tol_adapt == 1e-4);
  CHECK(config.homotopy.zeta == 0.75);
  CHECK(config.homotopy.xi_choice == XiChoice::mach);
  CHECK_FALSE(config.write_vtk);

  // Defaults round out everything not mentioned.
  CHECK(config.ma.tol_fp == 1e-8);
  CHECK(config.homotopy.C0 == 5.0);

  write_file(dir + "/bad.cfg", "not a config\n");
  CHECK_THROWS_AS(load_config(dir + "/bad.cfg"), ParseError);
  write_file(dir + "/bad2.cfg", "otadapt 1\n[mesh]\nbogus_key = 3\n");
  CHECK_THROWS_AS(load_config(dir + "/bad2.cfg"), ParseError);
}

TEST_CASE("explicit geometry sections build segments and corners") {
  const std::string dir = temp_dir("cfg_geom");
  const std::string path = write_file(dir + "/g.cfg", R"(otadapt 1
[geometry]
segment = line 0 0 1 0
segment = line 1 0 1 1
segment = line 1 1 0 1
segment = line 0 1 0 0
corner = 0 0 3 0
corner = 1 0 0 1
corner = 1 1 1 2
corner = 0 1 2 3
[mesh]
generate = square 2 2 1
)");
  const AdaptConfig config = load_config(path);
  REQUIRE(config.geometry.has_value());
  CHECK(config.geometry->segment_count() == 4);
  CHECK(config.geometry->corners().size() == 4);
  CHECK(config.geometry->neighbor(0, true) == 1);
}

TEST_CASE("uniform state adaptation returns the input mesh") {
  AdaptConfig config;
  config.mesh_generate = "square 8 8 2";
  config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
  config.state_preset = "uniform";
  config.max_adapt = 1;
  config.output_dir = temp_dir("uniform_run");
  config.write_vtk = false;
  const RunReport report = run_adaptation(config);
  CHECK(report.iterations_run == 1);
  const Mesh initial = structured_rect(0, 0, 1, 1, 8, 8, 2);
  const Mesh adapted = load_mesh(config.output_dir + "/adapted_001.otm");
  for (size_t i = 0; i < initial.coords().size(); ++i)
    CHECK(adapted.coords()[i] ==
          doctest::Approx(initial.coords()[i]).epsilon(1e-8));
  CHECK(fs::exists(config.output_dir + "/report.json"));
}

TEST_CASE("report records the required diagnostics per iteration") {
  AdaptConfig config;
  config.mesh_generate = "square 8 8 2";
  config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
  config.state_preset = "ring";
  config.state_params["amplitude"] = 2.0;
  config.max_adapt = 1;
  config.output_dir = temp_dir("ring_run");
  config.write_vtk = false;
  run_adaptation(config);
  std::ifstream in(config.output_dir + "/report.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.contains("config"));
  CHECK(j["note"].get<std::string>().find("re-solve") != std::string::npos);
  REQUIRE(j["iterations"].size() == 1);
  const auto& rec = j["iterations"][0];
  for (const char* key : {"theta", "ma_iterations", "ma_final_residual",
                          "min_det_H", "min_det_J", "clamp_count", "mean_u",
                          "h_min", "state_change"})
    CHECK(rec.contains(key));
}

TEST_CASE("eta and AV diagnostics are produced when requested") {
  AdaptConfig config;
  config.mesh_generate = "square 8 8 2";
  config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
  config.state_preset = "tanh-shock";
  config.max_adapt = 1;
  config.output_dir = temp_dir("eta_run");
  config.write_vtk = false;
  config.write_eta = true;
  const RunReport report = run_adaptation(config);
  CHECK(report.iterations.front().eta_max > 0.0);
  CHECK(report.iterations.front().shock_element_count > 0);
  CHECK(fs::exists(config.output_dir + "/eta_001.otf"));
  CHECK(fs::exists(config.output_dir + "/av_001.otf"));
}

TEST_CASE("velocity-divergence monitor drives the loop as well") {
  AdaptConfig config;
  config.mesh_generate = "square 10 10 2";
  config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
  config.state_preset = "tanh-shock";
  config.monitor.option = MonitorConfig::Option::velocity_divergence;
  config.monitor.beta = 2.0;
  config.max_adapt = 1;
  config.output_dir = temp_dir("vdiv_run");
  config.write_vtk = false;
  const RunReport report = run_adaptation(config);
  REQUIRE(report.iterations.size() == 1);
  CHECK(report.iterations.front().theta > 1.0);   // indicator active
  CHECK(report.iterations.front().min_det_J > 0.0);
  // The compression layer attracts elements.
  const Mesh initial = structured_rect(0, 0, 1, 1, 10, 10, 2);
  const Mesh adapted = load_mesh(config.output_dir + "/adapted_001.otm");
  const auto loc0 = initial.locate_point(0.5, 0.5);
  const auto loc1 = adapted.locate_point(0.5, 0.5);
  CHECK(adapted.element_size(loc1.elem) < initial.element_size(loc0.elem));
}

TEST_CASE("missing state file fails with the path and writes nothing") {
  AdaptConfig config;
  config.mesh_generate = "square 4 4 1";
  config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
  config.state_file = "/nonexistent/state.otf";
  config.output_dir = temp_dir("missing_run");
  bool threw = false;
  try {
    run_adaptation(config);
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("/nonexistent/state.otf") != std::string::npos);
  }
  CHECK(threw);
  CHECK_FALSE(fs::exists(config.output_dir + "/report.json"));
  CHECK_FALSE(fs::exists(config.output_dir + "/adapted_001.otm"));
}

TEST_CASE("two identical runs produce identical report numbers") {
  auto run_once = [](const std::string& dir) {
    AdaptConfig config;
    config.mesh_generate = "square 8 8 2";
    config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
    config.state_preset = "tanh-shock";
    config.max_adapt = 2;
    config.tol_adapt = 1e-14;
    config.output_dir = dir;
    config.write_vtk = false;
    run_adaptation(config);
    std::ifstream in(dir + "/report.json");
    return nlohmann::json::parse(in);
  };
  const auto a = run_once(temp_dir("det_a"));
  const auto b = run_once(temp_dir("det_b"));
  REQUIRE(a["iterations"].size() == b["iterations"].size());
  for (size_t i = 0; i < a["iterations"].size(); ++i) {
    auto ra = a["iterations"][i];
    auto rb = b["iterations"][i];
    ra.erase("seconds");
    rb.erase("seconds");
    CHECK(ra == rb);
  }
}

TEST_CASE("ma-solve mode reports the identity map for uniform density") {
  AdaptConfig config;
  config.mesh_generate = "square 6 6 2";
  config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
  config.density_preset = "uniform";
  config.output_dir = temp_dir("masolve_run");
  const MASolveReport report = run_ma_solve(config);
  CHECK(report.q_minus_x_inf <= 1e-8);
  CHECK(fs::exists(config.output_dir + "/adapted_001.otm"));
}

TEST_CASE("boundary retagging matches faces to segments by proximity") {
  const Mesh mesh = ramp_channel(0.5, 1.0, 1.5, 1.5, 25, 37, 2, 2, 2, 4, 2);
  const auto geometry = BoundaryGeometry::double_ramp(0.5, 1.0, 1.5, 1.5, 25, 37);
  // Scramble the tags, then recover them from the geometry.
  std::vector<MeshFace> faces = mesh.faces();
  for (auto& f : faces)
    if (f.boundary()) f.seg = 0;
  const Mesh scrambled(mesh.degree(), mesh.coords(), faces);
  const Mesh retagged = match_boundary_segments(scrambled, geometry);
  for (size_t i = 0; i < retagged.faces().size(); ++i)
    if (retagged.faces()[i].boundary())
      CHECK(retagged.faces()[i].seg == mesh.faces()[i].seg);

  // A mesh that does not lie on the geometry is rejected.
  const Mesh off = structured_rect(5, 5, 6, 6, 2, 2, 1);
  CHECK_THROWS_AS(match_boundary_segments(off, geometry), InvalidMesh);
}

TEST_CASE("cli subcommands and exit codes") {
  const std::string dir = temp_dir("cli_test");

  // Usage errors exit with 1.
  {
    const char* argv[] = {"otadapt", "bogus-command"};
    CHECK(run_cli(2, argv) == 1);
  }
  {
    const char* argv[] = {"otadapt"};
    CHECK(run_cli(1, argv) == 1);
  }

  // check-state with a negative-density state exits with 2.
  const Mesh mesh = structured_rect(0, 0, 1, 1, 3, 3, 2);
  save_mesh(mesh, dir + "/m.otm");
  StateFieldDG bad = make_uniform_state(mesh, {});
  bad.at(0, 0, 0) = -1.0;
  save_field(bad, dir + "/bad.otf");
  const std::string mesh_path = dir + "/m.otm";
  const std::string bad_path = dir + "/bad.otf";
  {
    const char* argv[] = {"otadapt", "check-state", mesh_path.c_str(),
                          bad_path.c_str()};
    CHECK(run_cli(4, argv) == 2);
  }

  // A healthy state passes with 0.
  const StateFieldDG good = make_uniform_state(mesh, {});
  save_field(good, dir + "/good.otf");
  const std::string good_path = dir + "/good.otf";
  {
    const char* argv[] = {"otadapt", "check-state", mesh_path.c_str(),
                          good_path.c_str()};
    CHECK(run_cli(4, argv) == 0);
  }

  // export-vtk writes the file and exits 0.
  const ScalarFieldDG rho = good.component(0);
  save_field(rho, dir + "/rho.otf");
  const std::string rho_path = dir + "/rho.otf";
  const std::string vtk_path = dir + "/out.vtk";
  {
    const char* argv[] = {"otadapt", "export-vtk", mesh_path.c_str(),
                          rho_path.c_str(), "-o", vtk_path.c_str()};
    CHECK(run_cli(6, argv) == 0);
    CHECK(fs::exists(vtk_path));
  }

  // adapt runs a config file end to end.
  const std::string cfg = dir + "/run.cfg";
  {
    std::ofstream out(cfg);
    out << "otadapt 1\n[mesh]\ngenerate = square 4 4 2\n"
        << "[geometry]\npreset = rect 0 0 1 1\n"
        << "[state]\npreset = uniform\n"
        << "[adapt]\nmax_iters = 1\n"
        << "[output]\ndir = " << dir << "/out\nvtk = off\n";
  }
  {
    const char* argv[] = {"otadapt", "adapt", cfg.c_str()};
    CHECK(run_cli(3, argv) == 0);
    CHECK(fs::exists(dir + "/out/adapted_001.otm"));
    CHECK(fs::exists(dir + "/out/report.json"));
  }

  // ma-solve against the same config family.
  const std::string mcfg = dir + "/ma.cfg";
  {
    std::ofstream out(mcfg);
    out << "otadapt 1\n[mesh]\ngenerate = square 4 4 2\n"
        << "[geometry]\npreset = rect 0 0 1 1\n"
        << "[density]\npreset = uniform\n"
        << "[output]\ndir = " << dir << "/ma_out\n";
  }
  {
    const char* argv[] = {"otadapt", "ma-solve", mcfg.c_str()};
    CHECK(run_cli(3, argv) == 0);
    CHECK(fs::exists(dir + "/ma_out/report.json"));
  }

  // demo homotopy prints a trace and succeeds.
  {
    const char* argv[] = {"otadapt", "demo", "homotopy"};
    CHECK(run_cli(3, argv) == 0);
  }
}
