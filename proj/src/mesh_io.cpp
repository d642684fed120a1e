#include "helmopt/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace helmopt {

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::string expect(const std::string& section) {
    std::string line;
    if (!next(line)) fail("unexpected end of file in " + section + " section");
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(source_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string source_;
  int line_no_ = 0;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  const auto b = s.find_last_not_of(" \t");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

template <typename T>
T read_value(std::istringstream& is, LineReader& reader, const std::string& what) {
  T value{};
  if (!(is >> value)) reader.fail("malformed " + what);
  return value;
}

int tag_id(BoundaryTag tag) { return static_cast<int>(tag) + 1; }

}  // namespace

Mesh parse_msh(std::istream& in, const MshTagMap& tags, const std::string& source) {
  LineReader reader(in, source);
  std::string line;
  bool have_format = false, have_nodes = false, have_elements = false;
  std::vector<Vec2> nodes;
  std::unordered_map<long, Index> node_id;
  std::vector<Triangle> tris;
  std::vector<std::pair<std::array<long, 2>, int>> lines;
  std::vector<std::array<long, 3>> tri_ids;

  while (reader.next(line)) {
    const std::string head = trim(line);
    if (head == "$MeshFormat") {
      std::istringstream is(reader.expect("$MeshFormat"));
      const auto version = read_value<double>(is, reader, "$MeshFormat version");
      const auto file_type = read_value<int>(is, reader, "$MeshFormat file type");
      if (version < 2.0 || version >= 3.0) reader.fail("unsupported MSH version (only 2.x is read)");
      if (file_type != 0) reader.fail("binary MSH files are not supported");
      if (trim(reader.expect("$MeshFormat")) != "$EndMeshFormat") reader.fail("missing $EndMeshFormat");
      have_format = true;
    } else if (head == "$Nodes") {
      std::istringstream cs(reader.expect("$Nodes"));
      const auto count = read_value<long>(cs, reader, "$Nodes count");
      if (count < 0) reader.fail("negative node count in $Nodes section");
      for (long k = 0; k < count; ++k) {
        std::istringstream is(reader.expect("$Nodes"));
        const auto id = read_value<long>(is, reader, "node id in $Nodes section");
        const auto x = read_value<double>(is, reader, "node coordinate in $Nodes section");
        const auto y = read_value<double>(is, reader, "node coordinate in $Nodes section");
        if (node_id.count(id)) reader.fail("duplicate node id " + std::to_string(id));
        node_id[id] = static_cast<Index>(nodes.size());
        nodes.emplace_back(x, y);
      }
      if (trim(reader.expect("$Nodes")) != "$EndNodes") reader.fail("missing $EndNodes");
      have_nodes = true;
    } else if (head == "$Elements") {
      std::istringstream cs(reader.expect("$Elements"));
      const auto count = read_value<long>(cs, reader, "$Elements count");
      if (count < 0) reader.fail("negative element count in $Elements section");
      for (long k = 0; k < count; ++k) {
        std::istringstream is(reader.expect("$Elements"));
        read_value<long>(is, reader, "element id in $Elements section");
        const auto type = read_value<int>(is, reader, "element type in $Elements section");
        const auto ntags = read_value<int>(is, reader, "tag count in $Elements section");
        int physical = 0;
        for (int t = 0; t < ntags; ++t) {
          const auto v = read_value<int>(is, reader, "element tag in $Elements section");
          if (t == 0) physical = v;
        }
        if (type == 1) {
          std::array<long, 2> ids{};
          for (auto& id : ids) id = read_value<long>(is, reader, "line node in $Elements section");
          lines.push_back({ids, physical});
        } else if (type == 2) {
          std::array<long, 3> ids{};
          for (auto& id : ids) id = read_value<long>(is, reader, "triangle node in $Elements section");
          tri_ids.push_back(ids);
        } else if (type == 15) {
          continue;
        } else {
          reader.fail("unsupported element type " + std::to_string(type) + " (only 1, 2 and 15 are read)");
        }
      }
      if (trim(reader.expect("$Elements")) != "$EndElements") reader.fail("missing $EndElements");
      have_elements = true;
    } else if (!head.empty() && head[0] == '$' && head.rfind("$End", 0) != 0) {
      // unknown section: skip to its end marker
      const std::string end = "$End" + head.substr(1);
      std::string body;
      do {
        body = trim(reader.expect(head));
      } while (body != end);
    } else {
      reader.fail("unexpected content outside a section: '" + head + "'");
    }
  }
  if (!have_format) reader.fail("missing $MeshFormat section");
  if (!have_nodes) reader.fail("missing $Nodes section");
  if (!have_elements) reader.fail("missing $Elements section");
  if (tri_ids.empty()) reader.fail("no triangles in $Elements section");

  // keep only nodes referenced by triangles
  std::vector<Index> remap(nodes.size(), -1);
  std::vector<Vec2> used_nodes;
  auto resolve = [&](long id) -> Index {
    auto it = node_id.find(id);
    if (it == node_id.end()) reader.fail("element references unknown node id " + std::to_string(id));
    return it->second;
  };
  for (const auto& ids : tri_ids) {
    Triangle tri{};
    for (int k = 0; k < 3; ++k) {
      const Index raw = resolve(ids[k]);
      if (remap[raw] < 0) {
        remap[raw] = static_cast<Index>(used_nodes.size());
        used_nodes.push_back(nodes[raw]);
      }
      tri[k] = remap[raw];
    }
    tris.push_back(tri);
  }
  std::vector<BoundaryEdge> tagged;
  for (const auto& [ids, physical] : lines) {
    const Index a = remap[resolve(ids[0])];
    const Index b = remap[resolve(ids[1])];
    if (a < 0 || b < 0) continue;
    auto it = tags.physical.find(physical);
    if (it != tags.physical.end()) {
      tagged.push_back({{a, b}, it->second});
    } else if (tags.default_tag) {
      tagged.push_back({{a, b}, *tags.default_tag});
    } else {
      throw ConfigError("physical group " + std::to_string(physical) + " has no boundary tag mapping");
    }
  }
  if (!tags.default_tag) {
    // every boundary edge must come from a mapped line element
    Mesh probe = Mesh::from_triangles(used_nodes, tris, tagged, BoundaryTag::Outer);
    if (probe.boundary_edges().size() != tagged.size()) {
      throw ConfigError("boundary edges without a mapped physical group and no default tag");
    }
    return probe;
  }
  return Mesh::from_triangles(std::move(used_nodes), std::move(tris), tagged, *tags.default_tag);
}

Mesh import_msh(const std::string& path, const MshTagMap& tags) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file '" + path + "'");
  return parse_msh(in, tags, path);
}

void write_msh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << std::setprecision(17);
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.num_nodes() << "\n";
  for (Index i = 0; i < mesh.num_nodes(); ++i) out << i + 1 << " " << mesh.node(i).x() << " " << mesh.node(i).y() << " 0\n";
  out << "$EndNodes\n";
  const auto& edges = mesh.boundary_edges();
  out << "$Elements\n" << edges.size() + mesh.triangles().size() << "\n";
  long id = 1;
  for (const auto& e : edges) {
    out << id++ << " 1 2 " << tag_id(e.tag) << " " << tag_id(e.tag) << " " << e.nodes[0] + 1 << " " << e.nodes[1] + 1 << "\n";
  }
  for (const auto& t : mesh.triangles()) {
    out << id++ << " 2 2 10 10 " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  }
  out << "$EndElements\n";
}

void write_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, std::ostream& out) {
  const auto n = static_cast<std::size_t>(mesh.num_nodes());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# vtk DataFile Version 3.0\nhelmopt\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.nodes()) out << p.x() << " " << p.y() << " 0\n";
  const auto nt = mesh.triangles().size();
  out << "CELLS " << nt << " " << 4 * nt << "\n";
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << nt << "\n";
  for (std::size_t k = 0; k < nt; ++k) out << "5\n";
  if (fields.empty()) return;
  out << "POINT_DATA " << n << "\n";
  for (const auto& f : fields) {
    std::string name = f.name;
    for (char& c : name) {
      if (c == ' ' || c == '\t') c = '_';
    }
    if (const auto* s = std::get_if<std::vector<double>>(&f.values)) {
      if (s->size() != n) throw InvalidArgument("VTK field '" + f.name + "' has the wrong length");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : *s) out << v << "\n";
    } else {
      const auto& v = std::get<std::vector<Vec2>>(f.values);
      if (v.size() != n) throw InvalidArgument("VTK field '" + f.name + "' has the wrong length");
      out << "VECTORS " << name << " double\n";
      for (const auto& w : v) out << w.x() << " " << w.y() << " 0\n";
    }
  }
}

void export_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write_vtk(mesh, fields, out);
}

Mesh import_vtk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open VTK file '" + path + "'");
  LineReader reader(in, path);
  std::string line;
  std::vector<Vec2> nodes;
  std::vector<Triangle> tris;
  while (reader.next(line)) {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "POINTS") {
      const auto n = read_value<long>(is, reader, "POINTS count");
      for (long k = 0; k < n; ++k) {
        std::istringstream ps(reader.expect("POINTS"));
        const auto x = read_value<double>(ps, reader, "point coordinate");
        const auto y = read_value<double>(ps, reader, "point coordinate");
        nodes.emplace_back(x, y);
      }
    } else if (key == "CELLS") {
      const auto n = read_value<long>(is, reader, "CELLS count");
      for (long k = 0; k < n; ++k) {
        std::istringstream cs(reader.expect("CELLS"));
        if (read_value<int>(cs, reader, "cell size") != 3) reader.fail("only triangle cells are supported");
        Triangle t{};
        for (auto& v : t) v = read_value<Index>(cs, reader, "cell node");
        tris.push_back(t);
      }
    } else if (key == "POINT_DATA") {
      break;
    }
  }
  if (nodes.empty() || tris.empty()) reader.fail("missing POINTS or CELLS section");
  return Mesh::from_triangles(std::move(nodes), std::move(tris));
}

}  // namespace helmopt
