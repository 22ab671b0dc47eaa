#include "otadapt/io.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "otadapt/error.hpp"

namespace otadapt {

namespace {

// Line reader that skips comments/blank lines and tracks the line number.
struct LineReader {
  std::ifstream in;
  std::string path;
  int line_number = 0;

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) throw Error("cannot open file: " + p);
  }

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_number;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos) continue;
      if (line[pos] == '#') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path, line_number, what);
  }
};

void write_double(std::FILE* f, double v) { std::fprintf(f, " %.17g", v); }

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "w"));
  if (!f) throw Error("cannot open file for writing: " + path);
  return f;
}

}  // namespace

Mesh load_mesh(const std::string& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("missing header");
  std::istringstream header(line);
  std::string magic;
  int version = 0, degree = 0, n_elem = 0, np = 0;
  header >> magic >> version >> degree >> n_elem >> np;
  if (!header || magic != "otm") reader.fail("expected `otm 1 <k> <Ne> <Np>` header");
  if (version != 1) reader.fail("unsupported otm version " + std::to_string(version));
  if (degree < 1 || degree > 8) reader.fail("degree out of range [1, 8]");
  if (np != (degree + 1) * (degree + 1))
    reader.fail("nodes-per-element does not match degree");
  if (n_elem < 1) reader.fail("element count must be positive");

  std::vector<double> coords(static_cast<size_t>(n_elem) * np * 2);
  for (int e = 0; e < n_elem; ++e) {
    if (!reader.next(line)) reader.fail("unexpected end of file in element block");
    std::istringstream ss(line);
    for (int j = 0; j < np; ++j) {
      double x, y;
      if (!(ss >> x >> y))
        reader.fail("element " + std::to_string(e) + ": expected " +
                    std::to_string(np) + " coordinate pairs");
      coords[(static_cast<size_t>(e) * np + j) * 2] = x;
      coords[(static_cast<size_t>(e) * np + j) * 2 + 1] = y;
    }
  }

  if (!reader.next(line)) reader.fail("missing `faces` section");
  std::istringstream fh(line);
  std::string word;
  int n_faces = 0;
  fh >> word >> n_faces;
  if (!fh || word != "faces") reader.fail("expected `faces <count>`");

  std::vector<MeshFace> faces(n_faces);
  for (int i = 0; i < n_faces; ++i) {
    if (!reader.next(line)) reader.fail("unexpected end of file in face block");
    std::istringstream ss(line);
    MeshFace f;
    int third = 0, fourth = 0;
    if (!(ss >> f.elem_a >> f.face_a >> third >> fourth))
      reader.fail("face record " + std::to_string(i) + ": expected four integers");
    if (third == -1) {
      f.seg = fourth;
      if (f.seg < 0) reader.fail("boundary face with negative segment tag");
    } else {
      f.elem_b = third;
      f.face_b = fourth;
    }
    if (f.elem_a < 0 || f.elem_a >= n_elem ||
        (!f.boundary() && (f.elem_b < 0 || f.elem_b >= n_elem)))
      reader.fail("face record " + std::to_string(i) +
                  ": element index out of range");
    if (f.face_a < 0 || f.face_a > 3 || (!f.boundary() && (f.face_b < 0 || f.face_b > 3)))
      reader.fail("face record " + std::to_string(i) + ": local face out of range");
    faces[i] = f;
  }

  Mesh mesh(degree, std::move(coords), std::move(faces));
  const auto report = mesh.validate();
  if (!report.ok)
    throw InvalidMesh("load_mesh: " + path + ": " + report.errors.front().message +
                      " (element " + std::to_string(report.errors.front().element) + ")");
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  FilePtr f = open_for_write(path);
  std::fprintf(f.get(), "otm 1 %d %d %d\n", mesh.degree(), mesh.elem_count(),
               mesh.nodes_per_elem());
  for (int e = 0; e < mesh.elem_count(); ++e) {
    for (int j = 0; j < mesh.nodes_per_elem(); ++j) {
      write_double(f.get(), mesh.coord(e, j, 0));
      write_double(f.get(), mesh.coord(e, j, 1));
    }
    std::fprintf(f.get(), "\n");
  }
  std::fprintf(f.get(), "faces %zu\n", mesh.faces().size());
  for (const auto& face : mesh.faces()) {
    if (face.boundary())
      std::fprintf(f.get(), "%d %d -1 %d\n", face.elem_a, face.face_a, face.seg);
    else
      std::fprintf(f.get(), "%d %d %d %d\n", face.elem_a, face.face_a, face.elem_b,
                   face.face_b);
  }
}

namespace {

std::vector<double> load_field_values(const std::string& path, const Mesh& mesh,
                                      int ncomp_expected) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("missing header");
  std::istringstream header(line);
  std::string magic;
  int version = 0, degree = 0, n_elem = 0, ncomp = 0;
  header >> magic >> version >> degree >> n_elem >> ncomp;
  if (!header || magic != "otf")
    reader.fail("expected `otf 1 <k> <Ne> <ncomp>` header");
  if (version != 1) reader.fail("unsupported otf version");
  if (degree != mesh.degree()) reader.fail("field degree does not match mesh");
  if (n_elem != mesh.elem_count()) reader.fail("field element count does not match mesh");
  if (ncomp != ncomp_expected)
    reader.fail("expected " + std::to_string(ncomp_expected) + " components, file has " +
                std::to_string(ncomp));

  const int np = mesh.nodes_per_elem();
  std::vector<double> values(static_cast<size_t>(n_elem) * np * ncomp);
  for (int e = 0; e < n_elem; ++e)
    for (int j = 0; j < np; ++j) {
      if (!reader.next(line)) reader.fail("unexpected end of file in value block");
      std::istringstream ss(line);
      for (int c = 0; c < ncomp; ++c)
        if (!(ss >> values[(static_cast<size_t>(e) * np + j) * ncomp + c]))
          reader.fail("element " + std::to_string(e) + " node " + std::to_string(j) +
                      ": expected " + std::to_string(ncomp) + " values");
    }
  return values;
}

}  // namespace

ScalarFieldDG load_scalar_field(const std::string& path, const Mesh& mesh) {
  const auto values = load_field_values(path, mesh, 1);
  ScalarFieldDG field(mesh);
  field.coeffs() = values;
  return field;
}

StateFieldDG load_state_field(const std::string& path, const Mesh& mesh,
                              double gamma) {
  const auto values = load_field_values(path, mesh, 4);
  StateFieldDG state(mesh, gamma);
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j)
      for (int c = 0; c < 4; ++c)
        state.at(e, j, c) = values[(static_cast<size_t>(e) * mesh.nodes_per_elem() + j) * 4 + c];
  return state;
}

void save_field(const ScalarFieldDG& field, const std::string& path) {
  const Mesh& mesh = field.mesh();
  FilePtr f = open_for_write(path);
  std::fprintf(f.get(), "otf 1 %d %d 1\n", mesh.degree(), mesh.elem_count());
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j)
      std::fprintf(f.get(), "%.17g\n", field.at(e, j));
}

void save_field(const StateFieldDG& state, const std::string& path) {
  const Mesh& mesh = state.mesh();
  FilePtr f = open_for_write(path);
  std::fprintf(f.get(), "otf 1 %d %d 4\n", mesh.degree(), mesh.elem_count());
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < mesh.nodes_per_elem(); ++j)
      std::fprintf(f.get(), "%.17g %.17g %.17g %.17g\n", state.at(e, j, 0),
                   state.at(e, j, 1), state.at(e, j, 2), state.at(e, j, 3));
}

void export_vtk(const Mesh& mesh, const std::string& path,
                const std::vector<const ScalarFieldDG*>& fields,
                const std::vector<std::string>& names) {
  if (fields.size() != names.size())
    throw Error("export_vtk: fields/names size mismatch");
  const int k = mesh.degree();
  const int n1 = k + 1;
  const int np = mesh.nodes_per_elem();
  const long n_points = static_cast<long>(mesh.elem_count()) * np;
  const long n_cells = static_cast<long>(mesh.elem_count()) * k * k;

  FilePtr f = open_for_write(path);
  std::fprintf(f.get(), "# vtk DataFile Version 2.0\n");
  std::fprintf(f.get(), "otadapt mesh\n");
  std::fprintf(f.get(), "ASCII\n");
  std::fprintf(f.get(), "DATASET UNSTRUCTURED_GRID\n");
  std::fprintf(f.get(), "POINTS %ld double\n", n_points);
  for (int e = 0; e < mesh.elem_count(); ++e)
    for (int j = 0; j < np; ++j)
      std::fprintf(f.get(), "%.15g %.15g 0\n", mesh.coord(e, j, 0), mesh.coord(e, j, 1));

  std::fprintf(f.get(), "CELLS %ld %ld\n", n_cells, 5 * n_cells);
  for (int e = 0; e < mesh.elem_count(); ++e) {
    const long base = static_cast<long>(e) * np;
    for (int b = 0; b < k; ++b)
      for (int a = 0; a < k; ++a)
        std::fprintf(f.get(), "4 %ld %ld %ld %ld\n", base + b * n1 + a,
                     base + b * n1 + a + 1, base + (b + 1) * n1 + a + 1,
                     base + (b + 1) * n1 + a);
  }
  std::fprintf(f.get(), "CELL_TYPES %ld\n", n_cells);
  for (long i = 0; i < n_cells; ++i) std::fprintf(f.get(), "9\n");

  if (!fields.empty()) {
    std::fprintf(f.get(), "POINT_DATA %ld\n", n_points);
    for (size_t s = 0; s < fields.size(); ++s) {
      std::fprintf(f.get(), "SCALARS %s double 1\n", names[s].c_str());
      std::fprintf(f.get(), "LOOKUP_TABLE default\n");
      for (int e = 0; e < mesh.elem_count(); ++e)
        for (int j = 0; j < np; ++j)
          std::fprintf(f.get(), "%.15g\n", fields[s]->at(e, j));
    }
  }
}

}  // namespace otadapt
