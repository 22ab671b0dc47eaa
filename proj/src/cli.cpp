#include "otadapt/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>

#include "otadapt/driver.hpp"
#include "otadapt/error.hpp"
#include "otadapt/io.hpp"
#include "otadapt/presets.hpp"
#include "otadapt/shock_reg.hpp"

namespace otadapt {

namespace {

int cmd_adapt(const std::string& config_path) {
  const AdaptConfig config = load_config(config_path);
  const RunReport report = run_adaptation(config);
  std::printf("adaptation finished: %d iteration(s), %s\n", report.iterations_run,
              report.converged ? "converged" : "iteration cap reached");
  for (const auto& r : report.iterations)
    std::printf(
        "  iter %d: theta=%.6g ma_iters=%d residual=%.3e min_detH=%.3e "
        "state_change=%.3e\n",
        r.index, r.theta, r.ma_iterations, r.ma_final_residual, r.min_det_H,
        r.state_change);
  std::printf("report: %s\n", report.report_path.c_str());
  return 0;
}

int cmd_ma_solve(const std::string& config_path) {
  const AdaptConfig config = load_config(config_path);
  const MASolveReport report = run_ma_solve(config);
  std::printf("ma-solve: |q - x|_inf = %.3e, %d iterations, min det H = %.3e, "
              "equidistribution deviation = %.3e\n",
              report.q_minus_x_inf, report.iterations, report.min_det_H,
              report.equid_deviation);
  std::printf("report: %s\n", report.report_path.c_str());
  return 0;
}

int cmd_check_state(const std::string& mesh_path, const std::string& state_path,
                    double sigma0, double C0, const std::string& xi,
                    double eta_T) {
  const Mesh mesh = load_mesh(mesh_path);
  const StateFieldDG state = load_state_field(state_path, mesh);
  XiChoice choice = XiChoice::density;
  if (xi == "pressure") choice = XiChoice::pressure;
  else if (xi == "mach") choice = XiChoice::mach;
  else if (xi != "density") throw Error("unknown xi choice: " + xi);

  // Without wall information the eta equation is all-Neumann.
  const ScalarFieldDG eta = eta_solve(mesh, state, 1.5, mesh.h_min(), {});
  const ConstraintVerdict verdict =
      check_constraints(state, eta, sigma0, C0, choice, eta_T);
  if (verdict.pass) {
    std::printf("pass (sigma = %.6g)\n", verdict.value);
    return 0;
  }
  std::printf("fail: %s\n", verdict.message.c_str());
  return 2;
}

int cmd_export_vtk(const std::string& mesh_path,
                   const std::vector<std::string>& field_paths,
                   std::string out_path) {
  const Mesh mesh = load_mesh(mesh_path);
  std::vector<ScalarFieldDG> storage;
  std::vector<const ScalarFieldDG*> fields;
  std::vector<std::string> names;
  for (const auto& path : field_paths) {
    storage.push_back(load_scalar_field(path, mesh));
    names.push_back(std::filesystem::path(path).stem().string());
  }
  for (const auto& f : storage) fields.push_back(&f);
  if (out_path.empty())
    out_path = std::filesystem::path(mesh_path).stem().string() + ".vtk";
  export_vtk(mesh, out_path, fields, names);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_demo(const std::string& preset, const std::string& out_dir) {
  if (preset == "homotopy") {
    // Scheduler walkthrough on the tanh preset: states sharpen as lambda
    // decreases until the smoothness constraint trips.
    const Mesh mesh = structured_rect(0.0, 0.0, 1.0, 1.0, 12, 12, 2);
    HomotopyParams params;
    params.max_steps = 12;
    const HomotopyResult result =
        run_homotopy(mesh,
                     [&](int n) {
                       TanhShockParams p;
                       p.delta = 0.2 / (1 << std::min(n, 12));
                       return make_tanh_shock_state(mesh, p);
                     },
                     params);
    std::printf("homotopy demo: accepted step %d (sigma0 = %.4g)\n",
                result.accepted_n, result.sigma0);
    for (const auto& t : result.trace)
      std::printf("  n=%d lambda=(%.4g, %.4g) sigma=%.4g %s\n", t.n, t.lambda1,
                  t.lambda2, t.sigma, t.verdict.pass ? "ok" : t.verdict.message.c_str());
    return 0;
  }

  AdaptConfig config;
  config.state_preset = preset;
  config.output_dir = out_dir;
  if (preset == "uniform") {
    config.mesh_generate = "square 8 8 2";
    config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
    config.max_adapt = 1;
  } else if (preset == "tanh-shock") {
    config.mesh_generate = "square 16 16 3";
    config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
    config.max_adapt = 2;
    config.monitor.beta = 1.0;
  } else if (preset == "ring") {
    config.mesh_generate = "square 16 16 2";
    config.geometry = BoundaryGeometry::rectangle(0, 0, 1, 1);
    config.max_adapt = 2;
  } else if (preset == "oblique-shock") {
    config.mesh_generate = "rect 0 0 1.5 1 18 12 3";
    config.geometry = BoundaryGeometry::rectangle(0, 0, 1.5, 1);
    config.max_adapt = 2;
  } else {
    throw Error("unknown demo preset: " + preset);
  }
  const RunReport report = run_adaptation(config);
  std::printf("demo %s: %d iteration(s); outputs in %s\n", preset.c_str(),
              report.iterations_run, config.output_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"r-adaptive high-order mesh generation by optimal transport"};
  app.require_subcommand(1);

  std::string config_path, mesh_path, state_path, out_path, xi = "density";
  std::string demo_preset, demo_dir = "demo_out";
  std::vector<std::string> field_paths;
  double sigma0 = std::numeric_limits<double>::max();
  double C0 = 5.0, eta_T = 0.2;

  auto* adapt = app.add_subcommand("adapt", "run the mesh adaptation loop");
  adapt->add_option("config", config_path, "configuration file")->required();

  auto* ma = app.add_subcommand("ma-solve", "single Monge-Ampere solve");
  ma->add_option("config", config_path, "configuration file")->required();

  auto* check = app.add_subcommand("check-state", "positivity/smoothness verdict");
  check->add_option("mesh", mesh_path, "OTM mesh")->required();
  check->add_option("state", state_path, "OTF state field")->required();
  check->add_option("--sigma0", sigma0, "baseline smoothness value");
  check->add_option("--C0", C0, "smoothness constant");
  check->add_option("--xi", xi, "density|pressure|mach");
  check->add_option("--eta-T", eta_T, "viscosity threshold");

  auto* vtk = app.add_subcommand("export-vtk", "write a VTK file for plotting");
  vtk->add_option("mesh", mesh_path, "OTM mesh")->required();
  vtk->add_option("fields", field_paths, "OTF scalar fields");
  vtk->add_option("-o,--output", out_path, "output path");

  auto* demo = app.add_subcommand("demo", "run a built-in showcase");
  demo->add_option("preset", demo_preset,
                   "uniform|tanh-shock|ring|oblique-shock|homotopy")
      ->required();
  demo->add_option("--dir", demo_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*adapt) return cmd_adapt(config_path);
    if (*ma) return cmd_ma_solve(config_path);
    if (*check)
      return cmd_check_state(mesh_path, state_path, sigma0, C0, xi, eta_T);
    if (*vtk) return cmd_export_vtk(mesh_path, field_paths, out_path);
    if (*demo) return cmd_demo(demo_preset, demo_dir);
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return 1;
}

}  // namespace otadapt
