#include "otadapt/config.hpp"

#include <fstream>
#include <sstream>

#include "otadapt/error.hpp"
#include "otadapt/io.hpp"

namespace otadapt {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_flag(const std::string& value) {
  return value == "on" || value == "true" || value == "1" || value == "yes";
}

std::vector<double> numbers(const std::string& s) {
  std::istringstream ss(s);
  std::vector<double> out;
  double v;
  while (ss >> v) out.push_back(v);
  return out;
}

}  // namespace

AdaptConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);

  AdaptConfig config;
  std::string line, section;
  int line_number = 0;
  bool have_header = false;

  std::vector<Segment> segments;
  std::vector<Corner> corners;
  std::string geometry_preset;
  std::vector<int> wall_ids;

  auto fail = [&](const std::string& what) -> void {
    throw ParseError(path, line_number, what);
  };

  while (std::getline(in, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (!have_header) {
      std::istringstream ss(line);
      std::string magic;
      int version = 0;
      ss >> magic >> version;
      if (magic != "otadapt" || version != 1)
        fail("expected header `otadapt 1`");
      have_header = true;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section == "mesh") {
      if (key == "file") config.mesh_file = value;
      else if (key == "generate") config.mesh_generate = value;
      else fail("unknown [mesh] key: " + key);
    } else if (section == "geometry") {
      if (key == "preset") {
        geometry_preset = value;
      } else if (key == "segment") {
        std::istringstream ss(value);
        std::string kind;
        ss >> kind;
        if (kind == "line") {
          double x0, y0, x1, y1;
          if (!(ss >> x0 >> y0 >> x1 >> y1)) fail("segment line needs 4 numbers");
          segments.push_back(Segment::line({x0, y0}, {x1, y1}));
        } else if (kind == "circle") {
          double cx, cy, r;
          int orient;
          if (!(ss >> cx >> cy >> r >> orient)) fail("segment circle needs 4 numbers");
          segments.push_back(Segment::circle(cx, cy, r, orient));
        } else {
          fail("unknown segment kind: " + kind);
        }
      } else if (key == "corner") {
        std::istringstream ss(value);
        Corner c;
        if (!(ss >> c.x >> c.y >> c.seg_a >> c.seg_b)) fail("corner needs x y segA segB");
        corners.push_back(c);
      } else if (key == "wall") {
        std::istringstream ss(value);
        int id;
        while (ss >> id) wall_ids.push_back(id);
      } else {
        fail("unknown [geometry] key: " + key);
      }
    } else if (section == "state") {
      if (key == "file") config.state_file = value;
      else if (key == "preset") config.state_preset = value;
      else if (key == "gamma") config.gamma = std::stod(value);
      else config.state_params[key] = std::stod(value);
    } else if (section == "density") {
      if (key == "preset") config.density_preset = value;
      else config.density_params[key] = std::stod(value);
    } else if (section == "monitor") {
      if (key == "option") {
        if (value == "velocity_divergence")
          config.monitor.option = MonitorConfig::Option::velocity_divergence;
        else if (value == "density_gradient")
          config.monitor.option = MonitorConfig::Option::density_gradient;
        else fail("unknown monitor option: " + value);
      } else if (key == "beta") config.monitor.beta = std::stod(value);
      else if (key == "s_max_factor") config.monitor.s_max_factor = std::stod(value);
      else if (key == "smoothing") config.monitor.smoothing = parse_flag(value);
      else if (key == "ell_factor") config.monitor.ell_factor = std::stod(value);
      else if (key == "g_sharpness") config.monitor.g_sharpness = std::stod(value);
      else fail("unknown [monitor] key: " + key);
    } else if (section == "ma") {
      if (key == "tau") config.ma.tau = std::stod(value);
      else if (key == "tol_fp") config.ma.tol_fp = std::stod(value);
      else if (key == "max_fp") config.ma.max_fp = std::stoi(value);
      else if (key == "tol_bc") config.ma.tol_bc = std::stod(value);
      else if (key == "omega") config.ma.omega = std::stod(value);
      else if (key == "sliding") config.ma.sliding = parse_flag(value);
      else fail("unknown [ma] key: " + key);
    } else if (section == "adapt") {
      if (key == "max_iters") config.max_adapt = std::stoi(value);
      else if (key == "tol") config.tol_adapt = std::stod(value);
      else fail("unknown [adapt] key: " + key);
    } else if (section == "homotopy") {
      if (key == "lambda1") config.homotopy.lambda01 = std::stod(value);
      else if (key == "lambda2") config.homotopy.lambda02 = std::stod(value);
      else if (key == "zeta") config.homotopy.zeta = std::stod(value);
      else if (key == "eta_T") config.homotopy.eta_T = std::stod(value);
      else if (key == "C0") config.homotopy.C0 = std::stod(value);
      else if (key == "max_steps") config.homotopy.max_steps = std::stoi(value);
      else if (key == "xi") {
        if (value == "density") config.homotopy.xi_choice = XiChoice::density;
        else if (value == "pressure") config.homotopy.xi_choice = XiChoice::pressure;
        else if (value == "mach") config.homotopy.xi_choice = XiChoice::mach;
        else fail("unknown xi choice: " + value);
      } else fail("unknown [homotopy] key: " + key);
    } else if (section == "output") {
      if (key == "dir") config.output_dir = value;
      else if (key == "vtk") config.write_vtk = parse_flag(value);
      else if (key == "fields") config.write_fields = parse_flag(value);
      else if (key == "eta") config.write_eta = parse_flag(value);
      else fail("unknown [output] key: " + key);
    } else {
      fail("unknown section [" + section + "]");
    }
  }
  if (!have_header) throw ParseError(path, line_number, "empty config");

  if (!geometry_preset.empty()) {
    std::istringstream ss(geometry_preset);
    std::string kind;
    ss >> kind;
    std::string rest;
    std::getline(ss, rest);
    const auto v = numbers(rest);
    if (kind == "rect") {
      if (v.size() != 4) throw Error("geometry preset rect needs x0 y0 x1 y1");
      config.geometry = BoundaryGeometry::rectangle(v[0], v[1], v[2], v[3]);
    } else if (kind == "ramp") {
      if (v.size() != 6) throw Error("geometry preset ramp needs x1 x2 x3 H a1 a2");
      config.geometry =
          BoundaryGeometry::double_ramp(v[0], v[1], v[2], v[3], v[4], v[5]);
    } else if (kind == "annulus") {
      if (v.size() != 2) throw Error("geometry preset annulus needs r0 r1");
      config.geometry = BoundaryGeometry::annulus(v[0], v[1]);
    } else {
      throw Error("unknown geometry preset: " + kind);
    }
  } else if (!segments.empty()) {
    config.geometry = BoundaryGeometry(std::move(segments), std::move(corners));
  }
  if (config.geometry && !wall_ids.empty()) {
    std::vector<Segment> segs = config.geometry->segments();
    for (int id : wall_ids) {
      if (id < 0 || id >= static_cast<int>(segs.size()))
        throw Error("wall segment id out of range: " + std::to_string(id));
      segs[id].wall = true;
    }
    config.geometry = BoundaryGeometry(std::move(segs), config.geometry->corners());
    config.homotopy.wall_segments = wall_ids;
  }
  return config;
}

Mesh make_config_mesh(const AdaptConfig& config) {
  if (!config.mesh_file.empty()) return load_mesh(config.mesh_file);
  if (config.mesh_generate.empty())
    throw Error("config: neither mesh file nor generator given");
  std::istringstream ss(config.mesh_generate);
  std::string kind;
  ss >> kind;
  if (kind == "square") {
    int nx, ny, k;
    if (!(ss >> nx >> ny >> k)) throw Error("generate square needs nx ny k");
    return structured_rect(0.0, 0.0, 1.0, 1.0, nx, ny, k);
  }
  if (kind == "rect") {
    double x0, y0, x1, y1;
    int nx, ny, k;
    if (!(ss >> x0 >> y0 >> x1 >> y1 >> nx >> ny >> k))
      throw Error("generate rect needs x0 y0 x1 y1 nx ny k");
    return structured_rect(x0, y0, x1, y1, nx, ny, k);
  }
  if (kind == "annulus") {
    double r0, r1;
    int nr, nt, k;
    if (!(ss >> r0 >> r1 >> nr >> nt >> k))
      throw Error("generate annulus needs r0 r1 nr nt k");
    return structured_annulus(r0, r1, nr, nt, k);
  }
  if (kind == "ramp") {
    double x1, x2, x3, H, a1, a2;
    int nx1, nx2, nx3, ny, k;
    if (!(ss >> x1 >> x2 >> x3 >> H >> a1 >> a2 >> nx1 >> nx2 >> nx3 >> ny >> k))
      throw Error("generate ramp needs x1 x2 x3 H a1 a2 nx1 nx2 nx3 ny k");
    return ramp_channel(x1, x2, x3, H, a1, a2, nx1, nx2, nx3, ny, k);
  }
  throw Error("unknown mesh generator: " + kind);
}

}  // namespace otadapt
