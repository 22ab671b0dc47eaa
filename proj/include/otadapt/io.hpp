#pragma once

#include <string>
#include <vector>

#include "otadapt/fields.hpp"
#include "otadapt/mesh.hpp"

namespace otadapt {

/// OTM mesh format (ASCII, line oriented, 0-based indices):
///   otm 1 <k> <Ne> <Nnodes_per_elem>
///   x y x y ...            one line of Np pairs per element
///   faces <count>
///   e1 f1 e2 f2            interior face
///   e f -1 <segtag>        boundary face
/// Lines starting with '#' are comments. Loading validates the mesh and
/// throws ParseError (with line number) or InvalidMesh.
Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

/// OTF field format: header `otf 1 <k> <Ne> <ncomp>`, then Np lines of ncomp
/// values per element. States use component order (rho, rho v1, rho v2, rho E).
ScalarFieldDG load_scalar_field(const std::string& path, const Mesh& mesh);
StateFieldDG load_state_field(const std::string& path, const Mesh& mesh,
                              double gamma = 1.4);
void save_field(const ScalarFieldDG& field, const std::string& path);
void save_field(const StateFieldDG& state, const std::string& path);

/// Legacy-ASCII VTK unstructured-grid export; each element is subdivided into
/// k x k bilinear cells for plotting. Fields are written as point data.
void export_vtk(const Mesh& mesh, const std::string& path,
                const std::vector<const ScalarFieldDG*>& fields = {},
                const std::vector<std::string>& names = {});

}  // namespace otadapt
