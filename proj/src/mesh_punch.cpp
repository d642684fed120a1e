#include "helmopt/mesh.hpp"
#include "mesh_util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace helmopt {

namespace {

using EdgeKey = std::pair<Index, Index>;
EdgeKey key_of(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

double triangle_distance(const Mesh& mesh, Index t, const Vec2& p) {
  const auto bc = mesh.barycentric(t, p);
  if (bc[0] >= 0.0 && bc[1] >= 0.0 && bc[2] >= 0.0) return 0.0;
  const auto& tri = mesh.triangle(t);
  double d = 1e300;
  for (int k = 0; k < 3; ++k) d = std::min(d, segment_distance(p, mesh.node(tri[k]), mesh.node(tri[(k + 1) % 3])));
  return d;
}

// Boundary of the removed region as a list of directed edges (CCW around it).
std::vector<std::array<Index, 2>> cavity_edges(const Mesh& mesh, const std::vector<char>& removed) {
  std::map<EdgeKey, int> count;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    if (!removed[t]) continue;
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) count[key_of(tri[k], tri[(k + 1) % 3])] += 1;
  }
  std::vector<std::array<Index, 2>> out;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    if (!removed[t]) continue;
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) {
      if (count[key_of(tri[k], tri[(k + 1) % 3])] == 1) out.push_back({tri[k], tri[(k + 1) % 3]});
    }
  }
  return out;
}

}  // namespace

PunchedMesh punch_hole(const Mesh& mesh, const HoleSpec& hole, const PunchOptions& options) {
  const double eps = hole.radius;
  const Vec2 x0 = hole.center;
  if (!(eps > 0.0)) throw InvalidArgument("hole radius must be positive");
  if (!(hole.cap_omega > 0.0) || !(hole.mes_omega > 0.0)) {
    throw InvalidArgument("hole constants cap_omega and mes_omega must be positive");
  }
  if (mesh.locate(x0) < 0) throw GeometryError("hole center lies outside the mesh");

  const double h = local_mesh_size(mesh, x0, eps);
  if (eps < 0.25 * h) {
    std::ostringstream os;
    os << "hole radius " << eps << " is below h/4 for the local mesh size h=" << h
       << "; refine the mesh near the hole center to at most " << 4.0 * eps;
    throw ResolutionError(os.str());
  }
  for (const auto& e : mesh.boundary_edges()) {
    if (segment_distance(x0, mesh.node(e.nodes[0]), mesh.node(e.nodes[1])) <= eps) {
      throw GeometryError("hole intersects the " + to_string(e.tag) + " boundary");
    }
  }

  std::vector<char> removed(static_cast<std::size_t>(mesh.num_triangles()), 0);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    bool take = triangle_distance(mesh, t, x0) < eps + 0.25 * h;
    for (Index v : mesh.triangle(t)) take = take || (mesh.node(v) - x0).norm() < eps + 0.6 * h;
    removed[t] = take;
  }

  std::map<EdgeKey, std::vector<Index>> edge_tris;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) edge_tris[key_of(tri[k], tri[(k + 1) % 3])].push_back(t);
  }

  // grow the cavity until its boundary is star-shaped about x0
  std::vector<Index> loop;
  for (int round = 0;; ++round) {
    const auto edges = cavity_edges(mesh, removed);
    for (const auto& e : edges) {
      if (mesh.is_boundary_node(e[0]) || mesh.is_boundary_node(e[1])) {
        throw GeometryError("hole is too close to an existing boundary for local remeshing");
      }
    }
    std::map<Index, Index> next;
    for (const auto& e : edges) {
      if (next.count(e[0])) throw GeometryError("cavity around the hole is not simply connected");
      next[e[0]] = e[1];
    }
    loop.clear();
    Index cur = edges.front()[0];
    do {
      loop.push_back(cur);
      cur = next.at(cur);
    } while (cur != edges.front()[0] && loop.size() <= edges.size());
    if (loop.size() != edges.size()) throw GeometryError("cavity around the hole has several boundary loops");

    bool grew = false;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec2 a = mesh.node(loop[i]) - x0;
      const Vec2 b = mesh.node(loop[(i + 1) % loop.size()]) - x0;
      if (cross(a, b) > 0.05 * a.norm() * b.norm()) continue;
      for (Index t : edge_tris[key_of(loop[i], loop[(i + 1) % loop.size()])]) {
        if (!removed[t]) {
          removed[t] = 1;
          grew = true;
        }
      }
    }
    if (!grew) break;
    if (round == 10) throw GeometryError("cannot find a star-shaped cavity around the hole");
  }

  // renumber surviving nodes
  std::vector<char> used(static_cast<std::size_t>(mesh.num_nodes()), 0);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    if (removed[t]) continue;
    for (Index v : mesh.triangle(t)) used[v] = 1;
  }
  PunchedMesh out{mesh, {}, {}};
  out.node_map.assign(static_cast<std::size_t>(mesh.num_nodes()), -1);
  std::vector<Vec2> nodes;
  for (Index v = 0; v < mesh.num_nodes(); ++v) {
    if (!used[v]) continue;
    out.node_map[v] = static_cast<Index>(nodes.size());
    nodes.push_back(mesh.node(v));
  }

  std::vector<Triangle> tris;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    if (removed[t]) continue;
    const auto& tri = mesh.triangle(t);
    tris.push_back({out.node_map[tri[0]], out.node_map[tri[1]], out.node_map[tri[2]]});
    out.triangle_origin.push_back(t);
  }

  std::vector<Vec2> cavity_poly;
  std::vector<Index> cavity;
  for (Index v : loop) {
    cavity.push_back(out.node_map[v]);
    cavity_poly.push_back(mesh.node(v));
  }
  cavity = detail::start_at_angle_zero(std::move(cavity), nodes, x0);

  const int n_hole = std::max(8, static_cast<int>(std::round(2.0 * kPi * eps / h)));
  std::vector<std::vector<Index>> rings;
  std::vector<Index> ring;
  for (int j = 0; j < n_hole; ++j) {
    const double a = 2.0 * kPi * j / n_hole;
    ring.push_back(static_cast<Index>(nodes.size()));
    nodes.push_back(x0 + eps * Vec2(std::cos(a), std::sin(a)));
  }
  const std::vector<Index> hole_ring = ring;
  rings.push_back(std::move(ring));

  const detail::RadialFn r_cav = [&](double th) { return detail::ray_polygon(cavity_poly, x0, th); };
  double mean_r = 0.0;
  for (const auto& p : cavity_poly) mean_r += (p - x0).norm() / static_cast<double>(cavity_poly.size());
  const double h_cav = detail::radial_perimeter(r_cav, x0) / static_cast<double>(cavity.size());

  // rings blended between the circle and the cavity, spacing growing geometrically
  const double growth = 1.3;
  const double gap = mean_r - eps;
  std::vector<Index> movable;
  double s_cur = 0.0;
  double t_cur = 2.0 * kPi * eps / n_hole;
  for (;;) {
    const double t_next = std::min(growth * t_cur, h_cav);
    const double ds = 0.87 * 0.5 * (t_cur + t_next) / gap;
    const double remaining = 1.0 - s_cur;
    const double ds_last = 0.87 * 0.5 * (t_cur + h_cav) / gap;
    if (remaining < 1.5 * ds_last || remaining < 1.5 * ds) break;
    const double s_next = s_cur + ds;
    const detail::RadialFn r = [&, s_next](double th) { return (1.0 - s_next) * eps + s_next * r_cav(th); };
    const int n = std::max(8, static_cast<int>(std::round(detail::radial_perimeter(r, x0) / t_next)));
    std::vector<Index> layer;
    for (const auto& p : detail::sample_radial(r, x0, n)) {
      layer.push_back(static_cast<Index>(nodes.size()));
      movable.push_back(static_cast<Index>(nodes.size()));
      nodes.push_back(p);
    }
    rings.push_back(std::move(layer));
    s_cur = s_next;
    t_cur = t_next;
  }
  rings.push_back(cavity);

  std::vector<Triangle> fill;
  for (std::size_t l = 0; l + 1 < rings.size(); ++l) {
    auto part = detail::angular_zipper(rings[l], rings[l + 1], nodes, x0);
    fill.insert(fill.end(), part.begin(), part.end());
  }
  std::vector<char> locked(nodes.size(), 0);
  for (Index v : hole_ring) locked[v] = 1;
  detail::improve_triangulation(nodes, fill, movable, locked, 30);
  auto fill_quality = [&] {
    double worst = 180.0;
    for (const auto& t : fill) {
      if (cross(nodes[t[1]] - nodes[t[0]], nodes[t[2]] - nodes[t[0]]) <= 0.0) {
        throw GeometryError("local remeshing around the hole produced an inverted triangle");
      }
      worst = std::min(worst, detail::triangle_min_angle_deg(nodes[t[0]], nodes[t[1]], nodes[t[2]]));
    }
    return worst;
  };
  double worst = fill_quality();
  if (worst < options.min_angle_deg + 5.0) {
    // let the cavity boundary relax as well; the kept triangles stay in the quality check
    std::vector<Triangle> all = tris;
    const std::size_t kept = all.size();
    all.insert(all.end(), fill.begin(), fill.end());
    std::vector<Index> free_nodes = movable;
    free_nodes.insert(free_nodes.end(), cavity.begin(), cavity.end());
    detail::improve_triangulation(nodes, all, free_nodes, locked, 30, kept);
    fill.assign(all.begin() + static_cast<std::ptrdiff_t>(kept), all.end());
    worst = fill_quality();
  }
  if (worst < options.min_angle_deg) {
    std::ostringstream os;
    os << "local remeshing around the hole reached a minimum angle of " << worst << " degrees (floor "
       << options.min_angle_deg << ")";
    throw QualityError(os.str());
  }
  tris.insert(tris.end(), fill.begin(), fill.end());
  out.triangle_origin.resize(tris.size(), -1);

  std::vector<BoundaryEdge> edges;
  for (const auto& e : mesh.boundary_edges()) {
    edges.push_back({{out.node_map[e.nodes[0]], out.node_map[e.nodes[1]]}, e.tag});
  }
  for (std::size_t j = 0; j < hole_ring.size(); ++j) {
    edges.push_back({{hole_ring[j], hole_ring[(j + 1) % hole_ring.size()]}, BoundaryTag::Hole});
  }
  out.mesh = Mesh(std::move(nodes), std::move(tris), std::move(edges));
  return out;
}

}  // namespace helmopt
