#pragma once

#include "helmopt/mesh.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace helmopt {

/// Physical-group id -> BoundaryTag for Gmsh import. Boundary edges with no
/// line element, or with an unmapped physical id, get `default_tag`; when that
/// is empty they are an error.
struct MshTagMap {
  std::map<int, BoundaryTag> physical;
  std::optional<BoundaryTag> default_tag = BoundaryTag::Outer;
};

/// Gmsh MSH v2 ASCII reader ($MeshFormat, $Nodes, $Elements; element types
/// 1 = line, 2 = triangle, 15 = point; other 0D/1D/2D sections are skipped).
Mesh import_msh(const std::string& path, const MshTagMap& tags = {});
Mesh parse_msh(std::istream& in, const MshTagMap& tags = {}, const std::string& source = "<stream>");

/// Writes MSH v2 ASCII; boundary edges carry physical ids 1 (Outer),
/// 2 (Obstacle) and 3 (Hole), triangles carry 10.
void write_msh(const Mesh& mesh, const std::string& path);

struct VtkField {
  std::string name;
  std::variant<std::vector<double>, std::vector<Vec2>> values;
};

/// Legacy ASCII VTK unstructured grid with one POINT_DATA array per field.
void export_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::string& path);
void write_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, std::ostream& out);

/// Reads back the grid written by export_vtk (points and triangle cells);
/// every boundary edge is tagged Outer.
Mesh import_vtk(const std::string& path);

}  // namespace helmopt
