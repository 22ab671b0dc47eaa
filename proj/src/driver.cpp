#include "otadapt/driver.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <json.hpp>

#include "otadapt/error.hpp"
#include "otadapt/io.hpp"
#include "otadapt/monge_ampere.hpp"
#include "otadapt/presets.hpp"
#include "otadapt/shock_reg.hpp"

namespace otadapt {

namespace {

using nlohmann::json;

json config_json(const AdaptConfig& c) {
  json j;
  j["mesh"] = {{"file", c.mesh_file}, {"generate", c.mesh_generate}};
  j["state"] = {{"file", c.state_file},
                {"preset", c.state_preset},
                {"params", c.state_params},
                {"gamma", c.gamma}};
  j["monitor"] = {
      {"option", c.monitor.option == MonitorConfig::Option::density_gradient
                     ? "density_gradient"
                     : "velocity_divergence"},
      {"beta", c.monitor.beta},
      {"s_max_factor", c.monitor.s_max_factor},
      {"smoothing", c.monitor.smoothing},
      {"ell_factor", c.monitor.ell_factor},
      {"g_sharpness", c.monitor.g_sharpness}};
  j["ma"] = {{"tau", c.ma.tau},        {"tol_fp", c.ma.tol_fp},
             {"max_fp", c.ma.max_fp},  {"tol_bc", c.ma.tol_bc},
             {"omega", c.ma.omega},    {"sliding", c.ma.sliding}};
  j["adapt"] = {{"max_iters", c.max_adapt}, {"tol", c.tol_adapt}};
  j["homotopy"] = {{"lambda1", c.homotopy.lambda01},
                   {"lambda2", c.homotopy.lambda02},
                   {"zeta", c.homotopy.zeta},
                   {"eta_T", c.homotopy.eta_T},
                   {"C0", c.homotopy.C0}};
  j["output"] = {{"dir", c.output_dir},
                 {"vtk", c.write_vtk},
                 {"fields", c.write_fields}};
  if (c.geometry) {
    json segs = json::array();
    for (const auto& s : c.geometry->segments()) {
      if (s.kind == Segment::Kind::line)
        segs.push_back({{"kind", "line"},
                        {"from", {s.p0[0], s.p0[1]}},
                        {"to", {s.p1[0], s.p1[1]}},
                        {"wall", s.wall}});
      else
        segs.push_back({{"kind", "circle"},
                        {"center", {s.cx, s.cy}},
                        {"radius", s.radius},
                        {"orient", s.orient},
                        {"wall", s.wall}});
    }
    j["geometry"] = segs;
  }
  return j;
}

json record_json(const IterationRecord& r) {
  return json{{"iteration", r.index},
              {"theta", r.theta},
              {"ma_iterations", r.ma_iterations},
              {"ma_final_residual", r.ma_final_residual},
              {"ma_equation_residual", r.ma_equation_residual},
              {"min_det_H", r.min_det_H},
              {"min_det_J", r.min_det_J},
              {"max_boundary_c", r.max_boundary_c},
              {"mean_u", r.mean_u},
              {"clamp_count", r.clamp_count},
              {"slide_events", r.slide_events},
              {"duplicate_spread", r.duplicate_spread},
              {"h_min", r.h_min},
              {"state_change", r.state_change},
              {"seconds", r.seconds},
              {"eta_max", r.eta_max},
              {"shock_element_count", r.shock_element_count}};
}

StateFieldDG make_state(const AdaptConfig& config, const Mesh& mesh) {
  if (!config.state_file.empty())
    return load_state_field(config.state_file, mesh, config.gamma);
  if (config.state_preset.empty())
    throw Error("config: neither state file nor preset given");
  return make_state_preset(mesh, config.state_preset, config.state_params);
}

ScalarFieldDG adaptation_scalar(const StateFieldDG& state, XiChoice choice) {
  switch (choice) {
    case XiChoice::pressure: return state.derived(DerivedQuantity::pressure);
    case XiChoice::mach: return state.derived(DerivedQuantity::mach);
    default: return state.component(0);
  }
}

double min_det_j(const Mesh& mesh) {
  double v = std::numeric_limits<double>::max();
  for (int e = 0; e < mesh.elem_count(); ++e)
    v = std::min(v, mesh.jacobians(e).det_j.minCoeff());
  return v;
}

}  // namespace

Mesh match_boundary_segments(const Mesh& mesh, const BoundaryGeometry& geometry,
                             double tol_factor) {
  const double tol = tol_factor * mesh.diameter();
  std::vector<MeshFace> faces = mesh.faces();
  for (auto& face : faces) {
    if (!face.boundary()) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (int s = 0; s < geometry.segment_count(); ++s) {
      double worst = 0.0;
      for (int j : mesh.master().face_nodes(face.face_a))
        worst = std::max(worst,
                         geometry.segment(s).distance(mesh.coord(face.elem_a, j, 0),
                                                      mesh.coord(face.elem_a, j, 1)));
      if (worst < best_d) {
        best_d = worst;
        best = s;
      }
    }
    if (best < 0 || best_d > tol)
      throw InvalidMesh("match_boundary_segments: boundary face of element " +
                        std::to_string(face.elem_a) + " is " +
                        std::to_string(best_d) + " away from every segment");
    face.seg = best;
  }
  return Mesh(mesh.degree(), mesh.coords(), std::move(faces));
}

RunReport run_adaptation(const AdaptConfig& config) {
  namespace fs = std::filesystem;
  if (!config.geometry)
    throw Error("run_adaptation: config must describe the boundary geometry");
  const BoundaryGeometry& geometry = *config.geometry;

  auto mesh = std::make_shared<Mesh>(
      match_boundary_segments(make_config_mesh(config), geometry));
  StateFieldDG state = make_state(config, *mesh);

  fs::create_directories(config.output_dir);
  RunReport report;
  report.note =
      "flow re-solve steps replaced by analytic state reload / file state "
      "reinterpolation";

  for (int iter = 1; iter <= config.max_adapt; ++iter) {
    const auto start = std::chrono::steady_clock::now();
    IterationRecord record;
    record.index = iter;
    try {
      auto density = build_density(*mesh, state, config.monitor);
      record.theta = density->theta();

      MongeAmpereSolver solver(*mesh, geometry, config.ma);
      MASolution solution = solver.solve(*density, density->theta());
      record.ma_iterations = solution.iterations;
      record.ma_final_residual = solution.residual_history.empty()
                                     ? 0.0
                                     : solution.residual_history.back();
      record.ma_equation_residual = solution.ma_residual;
      record.min_det_H = solution.min_det_H;
      record.max_boundary_c = solution.max_boundary_c;
      record.mean_u = solution.mean_u;
      record.clamp_count = solution.clamp_count;
      record.slide_events = solution.slide_events;

      auto adapted = std::make_shared<Mesh>(
          extract_adapted_mesh(*mesh, solution, geometry, &record.duplicate_spread));
      if (!geometry.corners().empty())
        *adapted = corner_fix(*adapted, geometry);
      record.min_det_J = min_det_j(*adapted);
      record.h_min = adapted->h_min();

      // Transfer the state; analytic presets are resampled (the stand-in for
      // the flow re-solve), file states are interpolated.
      StateFieldDG carried = state.interpolate_onto(*adapted);
      StateFieldDG next = config.state_preset.empty()
                              ? carried
                              : make_state_preset(*adapted, config.state_preset,
                                                  config.state_params);
      record.state_change =
          relative_l2_change(adaptation_scalar(carried, config.homotopy.xi_choice),
                             adaptation_scalar(next, config.homotopy.xi_choice));

      char name[64];
      std::snprintf(name, sizeof(name), "adapted_%03d.otm", iter);
      save_mesh(*adapted, (fs::path(config.output_dir) / name).string());
      if (config.write_fields) {
        std::snprintf(name, sizeof(name), "density_%03d.otf", iter);
        save_field(density->field(), (fs::path(config.output_dir) / name).string());
        std::snprintf(name, sizeof(name), "state_%03d.otf", iter);
        save_field(next, (fs::path(config.output_dir) / name).string());
      }
      if (config.write_eta) {
        const ScalarFieldDG eta =
            eta_solve(*adapted, next, config.homotopy.lambda02, adapted->h_min(),
                      config.homotopy.wall_segments);
        const ScalarFieldDG av =
            av_field(eta, config.homotopy.lambda01, config.homotopy.eta_T);
        record.eta_max = eta.max_abs_nodal();
        record.shock_element_count =
            static_cast<int>(shock_elements(eta, config.homotopy.eta_T).size());
        std::snprintf(name, sizeof(name), "eta_%03d.otf", iter);
        save_field(eta, (fs::path(config.output_dir) / name).string());
        std::snprintf(name, sizeof(name), "av_%03d.otf", iter);
        save_field(av, (fs::path(config.output_dir) / name).string());
      }
      if (config.write_vtk) {
        std::snprintf(name, sizeof(name), "adapted_%03d.vtk", iter);
        const ScalarFieldDG rho_new = next.component(0);
        export_vtk(*adapted, (fs::path(config.output_dir) / name).string(),
                   {&rho_new}, {"density"});
      }

      // The outgoing mesh must stay alive until the state stops referring to it.
      std::shared_ptr<Mesh> previous = mesh;
      mesh = adapted;
      state = std::move(next);
    } catch (const Error& err) {
      throw Error("adaptation iteration " + std::to_string(iter) + ": " +
                  err.what());
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    report.iterations.push_back(record);
    report.iterations_run = iter;
    if (record.state_change <= config.tol_adapt) {
      report.converged = true;
      break;
    }
  }

  report.report_path =
      (fs::path(config.output_dir) / "report.json").string();
  std::ofstream out(report.report_path);
  out << report.to_json(config) << "\n";
  return report;
}

std::string RunReport::to_json(const AdaptConfig& config) const {
  json j;
  j["config"] = config_json(config);
  j["note"] = note;
  j["converged"] = converged;
  j["iterations_run"] = iterations_run;
  j["iterations"] = json::array();
  for (const auto& r : iterations) j["iterations"].push_back(record_json(r));
  return j.dump(2);
}

MASolveReport run_ma_solve(const AdaptConfig& config) {
  namespace fs = std::filesystem;
  if (!config.geometry)
    throw Error("run_ma_solve: config must describe the boundary geometry");
  const BoundaryGeometry& geometry = *config.geometry;

  Mesh mesh = make_config_mesh(config);
  mesh = match_boundary_segments(mesh, geometry);

  std::unique_ptr<DensityEvaluator> density;
  if (config.density_preset == "uniform") {
    density = make_uniform_density();
  } else if (config.density_preset == "ring") {
    RingParams p;
    auto get = [&](const char* key, double fallback) {
      auto it = config.density_params.find(key);
      return it == config.density_params.end() ? fallback : it->second;
    };
    p.cx = get("cx", p.cx);
    p.cy = get("cy", p.cy);
    p.radius = get("radius", p.radius);
    p.width = get("width", p.width);
    p.amplitude = get("amplitude", 9.0);
    density = make_ring_density(mesh, p);
  } else if (config.density_preset.empty()) {
    StateFieldDG state = make_state(config, mesh);
    density = build_density(mesh, state, config.monitor);
  } else {
    throw Error("unknown density preset: " + config.density_preset);
  }

  MongeAmpereSolver solver(mesh, geometry, config.ma);
  MASolution solution = solver.solve(*density, density->theta());

  MASolveReport r;
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j) {
      r.q_minus_x_inf = std::max(
          r.q_minus_x_inf, std::abs(solution.q1.at(e, j) - mesh.coord(e, j, 0)));
      r.q_minus_x_inf = std::max(
          r.q_minus_x_inf, std::abs(solution.q2.at(e, j) - mesh.coord(e, j, 1)));
    }
  r.iterations = solution.iterations;
  r.final_residual =
      solution.residual_history.empty() ? 0.0 : solution.residual_history.back();
  r.min_det_H = solution.min_det_H;
  r.equid_deviation =
      equidistribution_deviation(mesh, solution, *density, density->theta());

  fs::create_directories(config.output_dir);
  double spread = 0.0;
  Mesh adapted = extract_adapted_mesh(mesh, solution, geometry, &spread);
  if (!geometry.corners().empty()) adapted = corner_fix(adapted, geometry);
  save_mesh(adapted, (fs::path(config.output_dir) / "adapted_001.otm").string());

  json j;
  j["config"] = config_json(config);
  j["q_minus_x_inf"] = r.q_minus_x_inf;
  j["iterations"] = r.iterations;
  j["final_residual"] = r.final_residual;
  j["min_det_H"] = r.min_det_H;
  j["equid_deviation"] = r.equid_deviation;
  j["mean_u"] = solution.mean_u;
  j["max_boundary_c"] = solution.max_boundary_c;
  r.report_path = (fs::path(config.output_dir) / "report.json").string();
  std::ofstream out(r.report_path);
  out << j.dump(2) << "\n";
  return r;
}

}  // namespace otadapt
