#include "otadapt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "otadapt/error.hpp"

namespace otadapt {

Mesh::Mesh(int degree, std::vector<double> coords, std::vector<MeshFace> faces)
    : degree_(degree),
      np_((degree + 1) * (degree + 1)),
      master_(std::make_shared<MasterElement>(degree)),
      coords_(std::move(coords)),
      faces_(std::move(faces)) {
  if (coords_.empty() || coords_.size() % (2 * np_) != 0)
    throw InvalidMesh("Mesh: coordinate array size does not match degree");
  n_elem_ = static_cast<int>(coords_.size() / (2 * np_));
  for (const auto& f : faces_) {
    if (f.elem_a < 0 || f.elem_a >= n_elem_ || f.face_a < 0 || f.face_a > 3 ||
        (!f.boundary() && (f.elem_b >= n_elem_ || f.face_b < 0 || f.face_b > 3)))
      throw InvalidMesh("Mesh: face record references invalid element or face");
    if (f.boundary() && f.seg < 0)
      throw InvalidMesh("Mesh: boundary face without segment tag");
  }

  bbox_ = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (size_t i = 0; i < coords_.size(); i += 2) {
    bbox_[0] = std::min(bbox_[0], coords_[i]);
    bbox_[1] = std::min(bbox_[1], coords_[i + 1]);
    bbox_[2] = std::max(bbox_[2], coords_[i]);
    bbox_[3] = std::max(bbox_[3], coords_[i + 1]);
  }

  build_classes();
  build_index();
}

double Mesh::diameter() const {
  return std::hypot(bbox_[2] - bbox_[0], bbox_[3] - bbox_[1]);
}

void Mesh::build_classes() {
  const double tol = 1e-9 * std::max(diameter(), 1e-300);
  const int n_nodes = n_elem_ * np_;
  node_class_.assign(n_nodes, -1);
  // Quantized spatial hash; neighbor cells catch points straddling a grid line.
  std::unordered_map<long long, std::vector<int>> grid;
  auto key = [&](long long qx, long long qy) { return qx * 2000003LL + qy; };
  auto quant = [&](double v) { return static_cast<long long>(std::floor(v / tol)); };

  n_classes_ = 0;
  class_members_.clear();
  for (int idx = 0; idx < n_nodes; ++idx) {
    const double x = coords_[2 * idx], y = coords_[2 * idx + 1];
    const long long qx = quant(x), qy = quant(y);
    int found = -1;
    for (long long dx = -1; dx <= 1 && found < 0; ++dx)
      for (long long dy = -1; dy <= 1 && found < 0; ++dy) {
        auto it = grid.find(key(qx + dx, qy + dy));
        if (it == grid.end()) continue;
        for (int other : it->second) {
          if (std::abs(coords_[2 * other] - x) <= tol &&
              std::abs(coords_[2 * other + 1] - y) <= tol) {
            found = node_class_[other];
            break;
          }
        }
      }
    if (found < 0) {
      found = n_classes_++;
      class_members_.emplace_back();
    }
    node_class_[idx] = found;
    class_members_[found].emplace_back(idx / np_, idx % np_);
    grid[key(qx, qy)].push_back(idx);
  }
}

void Mesh::build_index() {
  int n = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(n_elem_)))));
  const double w = bbox_[2] - bbox_[0], h = bbox_[3] - bbox_[1];
  for (int attempt = 0; attempt < 4; ++attempt) {
    bins_x_ = bins_y_ = n;
    bin_elems_.assign(static_cast<size_t>(n) * n, {});
    size_t entries = 0;
    for (int e = 0; e < n_elem_; ++e) {
      double exmin = std::numeric_limits<double>::max(), eymin = exmin;
      double exmax = std::numeric_limits<double>::lowest(), eymax = exmax;
      for (int j = 0; j < np_; ++j) {
        exmin = std::min(exmin, coord(e, j, 0));
        exmax = std::max(exmax, coord(e, j, 0));
        eymin = std::min(eymin, coord(e, j, 1));
        eymax = std::max(eymax, coord(e, j, 1));
      }
      // Curved edges can bulge past the nodal hull slightly.
      const double pad = 0.05 * std::max(exmax - exmin, eymax - eymin) + 1e-12;
      exmin -= pad; exmax += pad; eymin -= pad; eymax += pad;
      int ix0 = w > 0 ? std::clamp(int((exmin - bbox_[0]) / w * n), 0, n - 1) : 0;
      int ix1 = w > 0 ? std::clamp(int((exmax - bbox_[0]) / w * n), 0, n - 1) : 0;
      int iy0 = h > 0 ? std::clamp(int((eymin - bbox_[1]) / h * n), 0, n - 1) : 0;
      int iy1 = h > 0 ? std::clamp(int((eymax - bbox_[1]) / h * n), 0, n - 1) : 0;
      for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) {
          bin_elems_[iy * n + ix].push_back(e);
          ++entries;
        }
    }
    const double mean = double(entries) / double(n) / double(n);
    if (mean <= 4.0 || n >= 4 * std::max(1, int(std::sqrt(double(n_elem_)))))
      return;
    n *= 2;
  }
}

double Mesh::element_size(int e) const {
  double hmin = std::numeric_limits<double>::max();
  for (int f = 0; f < 4; ++f) {
    const auto& chain = master_->face_nodes(f);
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
      const double dx = coord(e, chain[i + 1], 0) - coord(e, chain[i], 0);
      const double dy = coord(e, chain[i + 1], 1) - coord(e, chain[i], 1);
      hmin = std::min(hmin, std::hypot(dx, dy));
    }
  }
  return hmin;
}

double Mesh::h_min() const {
  double hmin = std::numeric_limits<double>::max();
  for (int e = 0; e < n_elem_; ++e) hmin = std::min(hmin, element_size(e));
  return hmin;
}

Mesh::ElementGeometry Mesh::jacobians(int e) const {
  const int nq = master_->quad_count();
  ElementGeometry geom;
  geom.det_j.resize(nq);
  geom.inv_j.resize(nq, 4);
  const double* xc = elem_coords(e);
  const auto& dxi = master_->dxi_at_quad();
  const auto& deta = master_->deta_at_quad();
  for (int g = 0; g < nq; ++g) {
    double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
    for (int j = 0; j < np_; ++j) {
      j11 += xc[2 * j] * dxi(g, j);
      j12 += xc[2 * j] * deta(g, j);
      j21 += xc[2 * j + 1] * dxi(g, j);
      j22 += xc[2 * j + 1] * deta(g, j);
    }
    const double det = j11 * j22 - j12 * j21;
    geom.det_j[g] = det;
    geom.inv_j(g, 0) = j22 / det;
    geom.inv_j(g, 1) = -j12 / det;
    geom.inv_j(g, 2) = -j21 / det;
    geom.inv_j(g, 3) = j11 / det;
  }
  return geom;
}

double Mesh::area() const {
  double total = 0.0;
  for (int e = 0; e < n_elem_; ++e) {
    const auto geom = jacobians(e);
    for (int g = 0; g < master_->quad_count(); ++g)
      total += master_->quad_weights()[g] * geom.det_j[g];
  }
  return total;
}

ValidityReport Mesh::validate(double aspect_warn) const {
  ValidityReport report;
  const double tol = 1e-10 * std::max(diameter(), 1e-300);
  for (int e = 0; e < n_elem_; ++e) {
    const auto geom = jacobians(e);
    if (geom.det_j.minCoeff() <= 0.0) {
      report.ok = false;
      report.errors.push_back(
          {e, "non-positive Jacobian (min det J = " +
                  std::to_string(geom.det_j.minCoeff()) + ")"});
    }
    double emax = 0.0, emin = std::numeric_limits<double>::max();
    for (int f = 0; f < 4; ++f) {
      const auto& chain = master_->face_nodes(f);
      double len = 0.0;
      for (size_t i = 0; i + 1 < chain.size(); ++i)
        len += std::hypot(coord(e, chain[i + 1], 0) - coord(e, chain[i], 0),
                          coord(e, chain[i + 1], 1) - coord(e, chain[i], 1));
      emax = std::max(emax, len);
      emin = std::min(emin, len);
    }
    if (emin > 0.0 && emax / emin > aspect_warn)
      report.warnings.push_back(
          {e, "aspect ratio " + std::to_string(emax / emin)});
  }
  // Conforming interfaces: side b traverses side a's nodes in reverse order.
  for (const auto& f : faces_) {
    if (f.boundary()) continue;
    const auto& na = master_->face_nodes(f.face_a);
    const auto& nb = master_->face_nodes(f.face_b);
    const int m = static_cast<int>(na.size());
    for (int i = 0; i < m; ++i) {
      const int ja = na[i], jb = nb[m - 1 - i];
      if (std::abs(coord(f.elem_a, ja, 0) - coord(f.elem_b, jb, 0)) > tol ||
          std::abs(coord(f.elem_a, ja, 1) - coord(f.elem_b, jb, 1)) > tol) {
        report.ok = false;
        report.errors.push_back(
            {f.elem_a, "interior face mismatch with element " +
                           std::to_string(f.elem_b)});
        break;
      }
    }
  }
  return report;
}

std::optional<Mesh::Location> Mesh::search(double x, double y) const {
  const double w = bbox_[2] - bbox_[0], h = bbox_[3] - bbox_[1];
  const int ix = w > 0 ? std::clamp(int((x - bbox_[0]) / w * bins_x_), 0, bins_x_ - 1) : 0;
  const int iy = h > 0 ? std::clamp(int((y - bbox_[1]) / h * bins_y_), 0, bins_y_ - 1) : 0;

  Location best;
  double best_excess = std::numeric_limits<double>::max();
  auto consider = [&](int e) -> bool {
    const auto r = master_->try_inverse_map(elem_coords(e), x, y);
    if (!r.converged) return false;
    if (r.inside) {
      best = {e, r.xi, r.eta, false};
      best_excess = 0.0;
      return true;
    }
    const double excess = std::max(std::abs(r.xi), std::abs(r.eta)) - 1.0;
    if (excess < best_excess) {
      best_excess = excess;
      best = {e, std::clamp(r.xi, -1.0, 1.0), std::clamp(r.eta, -1.0, 1.0), true};
    }
    return false;
  };

  for (int e : bin_elems_[iy * bins_x_ + ix])
    if (consider(e)) return best;
  // Nothing inside this bin's candidates; widen to the 3x3 neighborhood.
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int jx = ix + dx, jy = iy + dy;
      if (jx < 0 || jx >= bins_x_ || jy < 0 || jy >= bins_y_) continue;
      for (int e : bin_elems_[jy * bins_x_ + jx])
        if (consider(e)) return best;
    }
  if (best_excess < std::numeric_limits<double>::max()) return best;
  return std::nullopt;
}

Mesh::Location Mesh::locate_point(double x, double y) const {
  const double inflate = 1e-6 * diameter();
  if (x < bbox_[0] - inflate || x > bbox_[2] + inflate || y < bbox_[1] - inflate ||
      y > bbox_[3] + inflate)
    throw NotFound("locate_point: (" + std::to_string(x) + ", " + std::to_string(y) +
                   ") is outside the inflated bounding box");
  auto loc = search(x, y);
  if (!loc) {
    // Candidate lists missed it entirely; fall back to a full scan.
    Location best;
    double best_excess = std::numeric_limits<double>::max();
    for (int e = 0; e < n_elem_; ++e) {
      const auto r = master_->try_inverse_map(elem_coords(e), x, y);
      if (!r.converged) continue;
      const double excess = std::max(std::abs(r.xi), std::abs(r.eta)) - 1.0;
      if (excess < best_excess) {
        best_excess = excess;
        best = {e, std::clamp(r.xi, -1.0, 1.0), std::clamp(r.eta, -1.0, 1.0),
                excess > 1e-8};
      }
      if (best_excess <= 0.0) break;
    }
    if (best.elem < 0)
      throw NotFound("locate_point: no element found for query point");
    return best;
  }
  return *loc;
}

Mesh::Location Mesh::locate_clamped(double x, double y) const {
  const double cx = std::clamp(x, bbox_[0], bbox_[2]);
  const double cy = std::clamp(y, bbox_[1], bbox_[3]);
  Location loc = locate_point(cx, cy);
  if (cx != x || cy != y) loc.extrapolated = true;
  return loc;
}

Mesh::Location Mesh::locate_with_hint(double x, double y, int hint) const {
  if (hint >= 0 && hint < n_elem_) {
    const auto r = master_->try_inverse_map(elem_coords(hint), x, y);
    if (r.converged && r.inside) return {hint, r.xi, r.eta, false};
  }
  return locate_point(x, y);
}

std::array<double, 2> Mesh::forward_map(int e, double xi, double eta) const {
  std::vector<double> v(np_);
  master_->eval_basis(xi, eta, v.data());
  double x = 0.0, y = 0.0;
  const double* xc = elem_coords(e);
  for (int j = 0; j < np_; ++j) {
    x += xc[2 * j] * v[j];
    y += xc[2 * j + 1] * v[j];
  }
  return {x, y};
}

Mesh Mesh::with_coords(std::vector<double> new_coords) const {
  return Mesh(degree_, std::move(new_coords), faces_);
}

// ---------------------------------------------------------------------------
// Structured generators
// ---------------------------------------------------------------------------

namespace {

// Assembles a tensor-product element grid from a node functor
// (cell ix, cell iy, ref xi, ref eta) -> (x, y).
template <typename F>
std::vector<double> tensor_coords(int nx, int ny, int degree, F&& point) {
  const MasterElement master(degree);
  const int n1 = degree + 1;
  const int np = n1 * n1;
  std::vector<double> coords(static_cast<size_t>(nx) * ny * np * 2);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const int e = iy * nx + ix;
      for (int b = 0; b < n1; ++b)
        for (int a = 0; a < n1; ++a) {
          const auto p = point(ix, iy, master.nodes_1d()[a], master.nodes_1d()[b]);
          const int j = b * n1 + a;
          coords[(e * np + j) * 2] = p[0];
          coords[(e * np + j) * 2 + 1] = p[1];
        }
    }
  return coords;
}

std::vector<MeshFace> grid_faces(int nx, int ny, int tag_bottom, int tag_right,
                                 int tag_top, int tag_left, bool wrap_x = false) {
  std::vector<MeshFace> faces;
  auto elem = [nx](int ix, int iy) { return iy * nx + ix; };
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      // Vertical face to the right of (ix, iy).
      if (ix + 1 < nx)
        faces.push_back({elem(ix, iy), 1, elem(ix + 1, iy), 3, -1});
      else if (wrap_x)
        faces.push_back({elem(ix, iy), 1, elem(0, iy), 3, -1});
      // Horizontal face above (ix, iy).
      if (iy + 1 < ny) faces.push_back({elem(ix, iy), 2, elem(ix, iy + 1), 0, -1});
    }
  for (int ix = 0; ix < nx; ++ix) {
    faces.push_back({elem(ix, 0), 0, -1, -1, tag_bottom});
    faces.push_back({elem(ix, ny - 1), 2, -1, -1, tag_top});
  }
  if (!wrap_x)
    for (int iy = 0; iy < ny; ++iy) {
      faces.push_back({elem(nx - 1, iy), 1, -1, -1, tag_right});
      faces.push_back({elem(0, iy), 3, -1, -1, tag_left});
    }
  return faces;
}

}  // namespace

Mesh structured_rect(double x0, double y0, double x1, double y1, int nx, int ny,
                     int degree) {
  const double hx = (x1 - x0) / nx, hy = (y1 - y0) / ny;
  auto coords = tensor_coords(nx, ny, degree, [&](int ix, int iy, double xi,
                                                  double eta) {
    return std::array<double, 2>{x0 + hx * (ix + 0.5 * (xi + 1.0)),
                                 y0 + hy * (iy + 0.5 * (eta + 1.0))};
  });
  return Mesh(degree, std::move(coords), grid_faces(nx, ny, 0, 1, 2, 3));
}

Mesh structured_annulus(double r0, double r1, int nr, int nt, int degree,
                        double theta0, double theta1) {
  const double pi = std::acos(-1.0);
  const bool closed = theta0 == theta1;
  const double span = closed ? 2.0 * pi : theta1 - theta0;
  const double hr = (r1 - r0) / nr, ht = span / nt;
  const double theta_end = theta0 + span;
  // Angle decreases along grid x so elements are counterclockwise
  // (det J = r * (dr/2) * (dtheta/2) > 0).
  auto coords = tensor_coords(nt, nr, degree, [&](int it, int ir, double xi,
                                                  double eta) {
    const double theta = theta_end - ht * (it + 0.5 * (xi + 1.0));
    const double r = r0 + hr * (ir + 0.5 * (eta + 1.0));
    return std::array<double, 2>{r * std::cos(theta), r * std::sin(theta)};
  });
  auto faces = grid_faces(nt, nr, 0, 2, 1, 3, closed);
  return Mesh(degree, std::move(coords), std::move(faces));
}

Mesh ramp_channel(double x1, double x2, double x3, double height,
                  double angle1_deg, double angle2_deg, int nx1, int nx2, int nx3,
                  int ny, int degree) {
  const double pi = std::acos(-1.0);
  const double t1 = std::tan(angle1_deg * pi / 180.0);
  const double t2 = std::tan(angle2_deg * pi / 180.0);
  const double y2 = (x2 - x1) * t1;
  auto y_bottom = [&](double x) {
    if (x <= x1) return 0.0;
    if (x <= x2) return (x - x1) * t1;
    return y2 + (x - x2) * t2;
  };
  // Cell x-breaks along the bottom chain, one block per segment.
  std::vector<double> xb;
  for (int i = 0; i <= nx1; ++i) xb.push_back(x1 * i / nx1);
  for (int i = 1; i <= nx2; ++i) xb.push_back(x1 + (x2 - x1) * i / nx2);
  for (int i = 1; i <= nx3; ++i) xb.push_back(x2 + (x3 - x2) * i / nx3);
  const int nx = nx1 + nx2 + nx3;

  auto coords = tensor_coords(nx, ny, degree, [&](int ix, int iy, double xi,
                                                  double eta) {
    const double x = xb[ix] + (xb[ix + 1] - xb[ix]) * 0.5 * (xi + 1.0);
    const double yb = y_bottom(x);
    const double s = (iy + 0.5 * (eta + 1.0)) / ny;
    return std::array<double, 2>{x, yb + s * (height - yb)};
  });

  auto faces = grid_faces(nx, ny, 0, 3, 4, 5);
  // Split the bottom tag across the three bottom segments.
  for (auto& f : faces) {
    if (!f.boundary() || f.seg != 0) continue;
    const int ix = f.elem_a % nx;
    f.seg = ix < nx1 ? 0 : (ix < nx1 + nx2 ? 1 : 2);
  }
  return Mesh(degree, std::move(coords), std::move(faces));
}

Mesh stretched_rect(double x0, double y0, double x1, double y1, int nx, int ny,
                    double delta, int degree) {
  const double hx = (x1 - x0) / nx;
  const double rest = (y1 - y0 - delta) / (ny - 1);
  auto yb = [&](int iy) { return iy == 0 ? y0 : y0 + delta + (iy - 1) * rest; };
  auto coords = tensor_coords(nx, ny, degree, [&](int ix, int iy, double xi,
                                                  double eta) {
    const double ylo = yb(iy), yhi = yb(iy + 1);
    return std::array<double, 2>{x0 + hx * (ix + 0.5 * (xi + 1.0)),
                                 ylo + (yhi - ylo) * 0.5 * (eta + 1.0)};
  });
  return Mesh(degree, std::move(coords), grid_faces(nx, ny, 0, 1, 2, 3));
}

}  // namespace otadapt
