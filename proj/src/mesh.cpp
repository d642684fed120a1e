#include "helmopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace helmopt {

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Outer:
      return "Outer";
    case BoundaryTag::Obstacle:
      return "Obstacle";
    case BoundaryTag::Hole:
      return "Hole";
  }
  return "?";
}

BoundaryTag boundary_tag_from_string(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "outer") return BoundaryTag::Outer;
  if (lower == "obstacle") return BoundaryTag::Obstacle;
  if (lower == "hole") return BoundaryTag::Hole;
  throw InvalidArgument("unknown boundary tag '" + name + "' (expected Outer, Obstacle or Hole)");
}

namespace {

using EdgeKey = std::pair<Index, Index>;

EdgeKey key_of(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

double tri_signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross(b - a, c - a);
}

}  // namespace

Mesh::Mesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
           std::vector<BoundaryEdge> boundary_edges)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), edges_(std::move(boundary_edges)) {
  const auto n = static_cast<Index>(nodes_.size());
  if (triangles_.empty()) throw GeometryError("mesh has no triangles");
  for (const auto& p : nodes_) {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) throw GeometryError("non-finite node coordinate");
  }

  // directed edge -> owning triangle count, keyed by the undirected pair
  std::map<EdgeKey, std::pair<int, std::array<Index, 2>>> edge_use;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (Index v : tri) {
      if (v < 0 || v >= n) {
        throw GeometryError("triangle " + std::to_string(t) + " references node " + std::to_string(v) +
                            " out of range");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw GeometryError("triangle " + std::to_string(t) + " has repeated nodes");
    }
    const double area = tri_signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
    if (!(area > 0.0)) {
      std::ostringstream os;
      os << "triangle " << t << " has non-positive signed area " << area;
      throw GeometryError(os.str());
    }
    for (int k = 0; k < 3; ++k) {
      const Index a = tri[k];
      const Index b = tri[(k + 1) % 3];
      auto& slot = edge_use[key_of(a, b)];
      slot.first += 1;
      slot.second = {a, b};
    }
  }
  for (const auto& [key, use] : edge_use) {
    if (use.first > 2) {
      throw GeometryError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                          ") shared by more than two triangles");
    }
  }

  std::map<EdgeKey, bool> tagged;
  for (auto& e : edges_) {
    for (Index v : e.nodes) {
      if (v < 0 || v >= n) throw GeometryError("boundary edge references node out of range");
    }
    const auto key = key_of(e.nodes[0], e.nodes[1]);
    auto it = edge_use.find(key);
    if (it == edge_use.end() || it->second.first != 1) {
      throw GeometryError("boundary edge (" + std::to_string(e.nodes[0]) + "," + std::to_string(e.nodes[1]) +
                          ") does not belong to exactly one triangle");
    }
    if (tagged.count(key)) throw GeometryError("boundary edge listed twice");
    tagged[key] = true;
    e.nodes = it->second.second;  // orientation of the owning triangle: domain on the left
  }
  for (const auto& [key, use] : edge_use) {
    if (use.first == 1 && !tagged.count(key)) {
      throw GeometryError("untagged boundary edge (" + std::to_string(key.first) + "," +
                          std::to_string(key.second) + ")");
    }
  }

  node_tag_.assign(nodes_.size(), -1);
  for (const auto& e : edges_) {
    for (Index v : e.nodes) {
      const int tag = static_cast<int>(e.tag);
      if (node_tag_[v] != -1 && node_tag_[v] != tag) {
        throw GeometryError("node " + std::to_string(v) + " lies on two differently tagged boundaries");
      }
      node_tag_[v] = tag;
    }
  }

  node_tris_.assign(nodes_.size(), {});
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (Index v : triangles_[t]) node_tris_[v].push_back(static_cast<Index>(t));
  }
  build_loops();
}

void Mesh::build_loops() {
  loops_by_tag_.assign(3, {});
  for (int tag = 0; tag < 3; ++tag) {
    std::map<Index, Index> next;
    std::vector<Index> starts;
    for (const auto& e : edges_) {
      if (static_cast<int>(e.tag) != tag) continue;
      if (next.count(e.nodes[0])) {
        throw GeometryError("boundary of tag " + to_string(static_cast<BoundaryTag>(tag)) +
                            " is not a set of simple loops at node " + std::to_string(e.nodes[0]));
      }
      next[e.nodes[0]] = e.nodes[1];
      starts.push_back(e.nodes[0]);
    }
    std::map<Index, bool> visited;
    for (Index start : starts) {
      if (visited.count(start)) continue;
      BoundaryLoop loop;
      loop.tag = static_cast<BoundaryTag>(tag);
      Index cur = start;
      do {
        visited[cur] = true;
        loop.nodes.push_back(cur);
        auto it = next.find(cur);
        if (it == next.end()) {
          throw GeometryError("open boundary chain of tag " + to_string(loop.tag) + " at node " +
                              std::to_string(cur));
        }
        cur = it->second;
        if (cur != start && visited.count(cur)) {
          throw GeometryError("boundary chain of tag " + to_string(loop.tag) + " is not closed");
        }
      } while (cur != start);
      loops_by_tag_[tag].push_back(loop);
      loops_.push_back(std::move(loop));
    }
  }
}

Mesh Mesh::from_triangles(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
                          const std::vector<BoundaryEdge>& tagged, BoundaryTag default_tag) {
  for (auto& tri : triangles) {
    for (Index v : tri) {
      if (v < 0 || v >= static_cast<Index>(nodes.size())) throw GeometryError("triangle node index out of range");
    }
    if (tri_signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
  }
  std::map<EdgeKey, int> count;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) count[key_of(tri[k], tri[(k + 1) % 3])] += 1;
  }
  std::map<EdgeKey, BoundaryTag> tag_of;
  for (const auto& e : tagged) tag_of[key_of(e.nodes[0], e.nodes[1])] = e.tag;
  std::vector<BoundaryEdge> edges;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto key = key_of(tri[k], tri[(k + 1) % 3]);
      if (count[key] != 1) continue;
      auto it = tag_of.find(key);
      edges.push_back({{tri[k], tri[(k + 1) % 3]}, it == tag_of.end() ? default_tag : it->second});
    }
  }
  return Mesh(std::move(nodes), std::move(triangles), std::move(edges));
}

double Mesh::signed_area(Index t) const {
  const auto& tri = triangle(t);
  return tri_signed_area(node(tri[0]), node(tri[1]), node(tri[2]));
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (Index t = 0; t < num_triangles(); ++t) sum += signed_area(t);
  return sum;
}

Vec2 Mesh::centroid(Index t) const {
  const auto& tri = triangle(t);
  return (node(tri[0]) + node(tri[1]) + node(tri[2])) / 3.0;
}

double Mesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) h = std::max(h, (nodes_[tri[k]] - nodes_[tri[(k + 1) % 3]]).norm());
  }
  return h;
}

double Mesh::min_angle_deg() const {
  double worst = 180.0;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 u = nodes_[tri[(k + 1) % 3]] - nodes_[tri[k]];
      const Vec2 v = nodes_[tri[(k + 2) % 3]] - nodes_[tri[k]];
      const double angle = std::atan2(std::abs(cross(u, v)), u.dot(v));
      worst = std::min(worst, angle * 180.0 / kPi);
    }
  }
  return worst;
}

bool Mesh::has_tag(BoundaryTag tag) const { return !loops_by_tag_[static_cast<int>(tag)].empty(); }

std::vector<BoundaryTag> Mesh::tags() const {
  std::vector<BoundaryTag> out;
  for (int tag = 0; tag < 3; ++tag) {
    if (!loops_by_tag_[tag].empty()) out.push_back(static_cast<BoundaryTag>(tag));
  }
  return out;
}

const std::vector<BoundaryLoop>& Mesh::loops(BoundaryTag tag) const {
  const auto& l = loops_by_tag_[static_cast<int>(tag)];
  if (l.empty()) throw LookupError("mesh has no boundary tagged " + to_string(tag));
  return l;
}

std::optional<BoundaryTag> Mesh::node_tag(Index i) const {
  const int tag = node_tag_[static_cast<std::size_t>(i)];
  if (tag < 0) return std::nullopt;
  return static_cast<BoundaryTag>(tag);
}

std::array<double, 3> Mesh::barycentric(Index t, const Vec2& p) const {
  const auto& tri = triangle(t);
  const Vec2& a = node(tri[0]);
  const Vec2& b = node(tri[1]);
  const Vec2& c = node(tri[2]);
  const double area2 = cross(b - a, c - a);
  const double l1 = cross(c - b, p - b) / area2;
  const double l2 = cross(a - c, p - c) / area2;
  return {l1, l2, 1.0 - l1 - l2};
}

Index Mesh::locate(const Vec2& p) const {
  Index best = -1;
  double best_min = -1e-10;
  for (Index t = 0; t < num_triangles(); ++t) {
    const auto bc = barycentric(t, p);
    const double m = std::min({bc[0], bc[1], bc[2]});
    if (m >= best_min) {
      if (m >= 0.0) return t;
      best_min = m;
      best = t;
    }
  }
  return best;
}

Mesh Mesh::with_nodes(std::vector<Vec2> nodes) const {
  if (nodes.size() != nodes_.size()) throw InvalidArgument("with_nodes: node count mismatch");
  return Mesh(std::move(nodes), triangles_, edges_);
}

ShapeSpec ShapeSpec::rectangle(const Vec2& lo, const Vec2& hi) {
  return polygon({lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())});
}

VelocityField VelocityField::analytic(VectorFn fn, std::string name) {
  VelocityField v;
  v.data_ = std::move(fn);
  v.name_ = std::move(name);
  return v;
}

VelocityField VelocityField::nodal(std::vector<Vec2> values, std::string name) {
  VelocityField v;
  v.data_ = std::move(values);
  v.name_ = std::move(name);
  return v;
}

VelocityField VelocityField::zero() {
  return analytic([](const Vec2&) { return Vec2(0.0, 0.0); }, "zero");
}

VelocityField VelocityField::translation(const Vec2& direction) {
  return analytic([direction](const Vec2&) { return direction; }, "translate");
}

VelocityField VelocityField::dilation(const Vec2& center) {
  return analytic([center](const Vec2& x) { return Vec2(x - center); }, "dilate");
}

VelocityField VelocityField::rotation(const Vec2& center) {
  return analytic([center](const Vec2& x) { return Vec2(-(x.y() - center.y()), x.x() - center.x()); },
                  "rotate");
}

VelocityField VelocityField::stretch(const Vec2& center) {
  return analytic([center](const Vec2& x) { return Vec2(x.x() - center.x(), -(x.y() - center.y())); },
                  "stretch");
}

std::vector<Vec2> VelocityField::sample(const Mesh& mesh) const {
  if (const auto* values = std::get_if<std::vector<Vec2>>(&data_)) {
    if (values->size() != static_cast<std::size_t>(mesh.num_nodes())) {
      throw InvalidArgument("nodal velocity field '" + name_ + "' has " + std::to_string(values->size()) +
                            " vectors for " + std::to_string(mesh.num_nodes()) + " nodes");
    }
    return *values;
  }
  const auto& fn = std::get<VectorFn>(data_);
  std::vector<Vec2> out;
  out.reserve(mesh.nodes().size());
  for (const auto& x : mesh.nodes()) out.push_back(fn(x));
  return out;
}

Mesh deform(const Mesh& mesh, const VelocityField& velocity, double t) {
  return deform(mesh, velocity.sample(mesh), t);
}

Mesh deform(const Mesh& mesh, const std::vector<Vec2>& direction, double t) {
  if (direction.size() != static_cast<std::size_t>(mesh.num_nodes())) {
    throw InvalidArgument("deform: displacement size does not match node count");
  }
  // Lipschitz estimate of V sampled on edges; |t| Lip < 1 keeps I + tV injective.
  double lip = 0.0;
  for (const auto& tri : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const Index a = tri[k];
      const Index b = tri[(k + 1) % 3];
      const double len = (mesh.node(a) - mesh.node(b)).norm();
      lip = std::max(lip, (direction[a] - direction[b]).norm() / len);
    }
  }
  if (std::abs(t) * lip >= 1.0) {
    std::ostringstream os;
    os << "deformation t=" << t << " violates the bijectivity guard |t|*Lip(V)=" << std::abs(t) * lip << " >= 1";
    throw DeformationError(os.str());
  }
  std::vector<Vec2> moved(mesh.nodes().size());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = mesh.nodes()[i] + t * direction[i];

  Index worst = -1;
  double worst_area = 0.0;
  for (Index k = 0; k < mesh.num_triangles(); ++k) {
    const auto& tri = mesh.triangle(k);
    const double area = tri_signed_area(moved[tri[0]], moved[tri[1]], moved[tri[2]]);
    if (!(area > 0.0) && (worst < 0 || area < worst_area)) {
      worst = k;
      worst_area = area;
    }
  }
  if (worst >= 0) {
    std::ostringstream os;
    os << "deformation inverts triangle " << worst << " (signed area " << worst_area << ")";
    throw DeformationError(os.str());
  }
  return mesh.with_nodes(std::move(moved));
}

BoundaryGeometry boundary_geometry(const Mesh& mesh, BoundaryTag tag) {
  BoundaryGeometry geo;
  geo.tag = tag;
  for (const auto& loop : mesh.loops(tag)) {
    LoopGeometry lg;
    lg.loop = loop;
    const std::size_t n = loop.nodes.size();
    lg.edge_normal.resize(n);
    lg.edge_length.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 d = mesh.node(loop.nodes[(i + 1) % n]) - mesh.node(loop.nodes[i]);
      const double len = d.norm();
      lg.edge_length[i] = len;
      lg.edge_normal[i] = Vec2(d.y(), -d.x()) / len;  // right of travel = outward
    }
    lg.node_normal.resize(n);
    lg.node_tangent.resize(n);
    lg.node_weight.resize(n);
    lg.curvature.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t prev = (i + n - 1) % n;
      Vec2 nn = lg.edge_normal[prev] + lg.edge_normal[i];
      if (nn.norm() < 1e-14) nn = lg.edge_normal[i];
      nn.normalize();
      lg.node_normal[i] = nn;
      lg.node_tangent[i] = Vec2(-nn.y(), nn.x());
      lg.node_weight[i] = 0.5 * (lg.edge_length[prev] + lg.edge_length[i]);
      const Vec2 d0 = mesh.node(loop.nodes[i]) - mesh.node(loop.nodes[prev]);
      const Vec2 d1 = mesh.node(loop.nodes[(i + 1) % n]) - mesh.node(loop.nodes[i]);
      const double turn = std::atan2(cross(d0, d1), d0.dot(d1));
      lg.curvature[i] = turn / lg.node_weight[i];
    }
    geo.loops.push_back(std::move(lg));
  }
  return geo;
}

double local_mesh_size(const Mesh& mesh, const Vec2& p, double radius) {
  double h = 0.0;
  const Index home = mesh.locate(p);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    bool near = (t == home);
    if (!near) {
      for (Index v : tri) {
        if ((mesh.node(v) - p).norm() <= radius) near = true;
      }
    }
    if (!near) continue;
    for (int k = 0; k < 3; ++k) h = std::max(h, (mesh.node(tri[k]) - mesh.node(tri[(k + 1) % 3])).norm());
  }
  if (h == 0.0) throw GeometryError("point lies outside the mesh");
  return h;
}

}  // namespace helmopt
