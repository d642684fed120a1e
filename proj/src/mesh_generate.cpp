#include "helmopt/mesh.hpp"
#include "mesh_util.hpp"

#include <algorithm>
#include <cmath>

namespace helmopt {

Mesh generate_rectangle(double width, double height, double h) {
  if (!(width > 0.0) || !(height > 0.0) || !(h > 0.0)) {
    throw InvalidArgument("generate_rectangle: width, height and h must be positive");
  }
  if (!(h < std::min(width, height))) {
    throw InvalidArgument("generate_rectangle: h must be smaller than both sides");
  }
  const int nx = static_cast<int>(std::ceil(width / h - 1e-9));
  const int ny = static_cast<int>(std::ceil(height / h - 1e-9));
  const double dx = width / nx;
  const double dy = height / ny;

  std::vector<Vec2> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1) + nx * ny));
  auto corner = [nx](int i, int j) { return static_cast<Index>(j * (nx + 1) + i); };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) nodes.emplace_back(i * dx, j * dy);
  }
  const Index first_center = static_cast<Index>(nodes.size());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) nodes.emplace_back((i + 0.5) * dx, (j + 0.5) * dy);
  }

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(4 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Index c = first_center + j * nx + i;
      const Index a = corner(i, j), b = corner(i + 1, j), d = corner(i + 1, j + 1), e = corner(i, j + 1);
      tris.push_back({a, b, c});
      tris.push_back({b, d, c});
      tris.push_back({d, e, c});
      tris.push_back({e, a, c});
    }
  }

  std::vector<BoundaryEdge> edges;
  for (int i = 0; i < nx; ++i) {
    edges.push_back({{corner(i, 0), corner(i + 1, 0)}, BoundaryTag::Outer});
    edges.push_back({{corner(i + 1, ny), corner(i, ny)}, BoundaryTag::Outer});
  }
  for (int j = 0; j < ny; ++j) {
    edges.push_back({{corner(nx, j), corner(nx, j + 1)}, BoundaryTag::Outer});
    edges.push_back({{corner(0, j + 1), corner(0, j)}, BoundaryTag::Outer});
  }
  return Mesh(std::move(nodes), std::move(tris), std::move(edges));
}

Mesh generate_disk(const Vec2& center, double radius, double h) {
  if (!(radius > 0.0) || !(h > 0.0)) throw InvalidArgument("generate_disk: radius and h must be positive");
  if (!(h < radius)) throw InvalidArgument("generate_disk: h must be smaller than the radius");
  const int rings = static_cast<int>(std::ceil(radius / h - 1e-9));

  std::vector<Vec2> nodes{center};
  std::vector<std::vector<Index>> ring_nodes{{0}};
  for (int i = 1; i <= rings; ++i) {
    const double r = (i == rings) ? radius : radius * i / rings;
    const int count = 6 * i;
    std::vector<Index> ring;
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * kPi * j / count;
      ring.push_back(static_cast<Index>(nodes.size()));
      nodes.push_back(center + r * Vec2(std::cos(a), std::sin(a)));
    }
    ring_nodes.push_back(std::move(ring));
  }

  std::vector<Triangle> tris;
  for (int j = 0; j < 6; ++j) tris.push_back({0, ring_nodes[1][j], ring_nodes[1][(j + 1) % 6]});
  for (int i = 2; i <= rings; ++i) {
    // angle-ordered merge keeps the 6-fold symmetry of the ring layout
    const auto& in = ring_nodes[i - 1];
    const auto& out = ring_nodes[i];
    const std::size_t ni = in.size(), no = out.size();
    std::size_t a = 0, b = 0;
    while (a < ni || b < no) {
      const double next_in = static_cast<double>(a + 1) / ni;
      const double next_out = static_cast<double>(b + 1) / no;
      if (b < no && (a == ni || next_out <= next_in + 1e-12)) {
        tris.push_back({in[a % ni], out[b], out[(b + 1) % no]});
        ++b;
      } else {
        tris.push_back({in[a], out[b % no], in[(a + 1) % ni]});
        ++a;
      }
    }
  }

  std::vector<BoundaryEdge> edges;
  const auto& rim = ring_nodes.back();
  for (std::size_t j = 0; j < rim.size(); ++j) edges.push_back({{rim[j], rim[(j + 1) % rim.size()]}, BoundaryTag::Outer});
  return Mesh(std::move(nodes), std::move(tris), std::move(edges));
}

namespace {

Vec2 shape_center(const ShapeSpec& s) {
  if (const auto* d = std::get_if<ShapeSpec::Disk>(&s.shape)) return d->center;
  const auto& poly = std::get<ShapeSpec::Polygon>(s.shape).vertices;
  Vec2 c = Vec2::Zero();
  for (const auto& v : poly) c += v;
  return c / static_cast<double>(poly.size());
}

detail::RadialFn radial_of(const ShapeSpec& s, const Vec2& center, const char* what) {
  if (const auto* d = std::get_if<ShapeSpec::Disk>(&s.shape)) {
    if (!(d->radius > 0.0)) throw InvalidArgument(std::string(what) + " disk radius must be positive");
    if ((center - d->center).norm() >= d->radius) {
      throw GeometryError(std::string(what) + " does not contain the obstacle center");
    }
    const Vec2 cc = d->center;
    const double r = d->radius;
    return [cc, r, center](double th) { return detail::ray_circle(cc, r, center, th); };
  }
  const auto& poly = std::get<ShapeSpec::Polygon>(s.shape).vertices;
  if (poly.size() < 3) throw InvalidArgument(std::string(what) + " polygon needs at least 3 vertices");
  if (!detail::is_star_shaped(poly, center)) {
    throw GeometryError(std::string(what) + " polygon is not counterclockwise and star-shaped about the obstacle center");
  }
  return [poly, center](double th) { return detail::ray_polygon(poly, center, th); };
}

// Boundary loop nodes of a shape: exact circle points, or polygon edges
// subdivided so every corner is a node.
std::vector<Vec2> boundary_points(const ShapeSpec& s, const detail::RadialFn& r, const Vec2& center, double h) {
  if (std::holds_alternative<ShapeSpec::Disk>(s.shape)) {
    const int n = std::max(8, static_cast<int>(std::ceil(detail::radial_perimeter(r, center) / h)));
    return detail::sample_radial(r, center, n);
  }
  const auto& poly = std::get<ShapeSpec::Polygon>(s.shape).vertices;
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    const int m = std::max(1, static_cast<int>(std::ceil((b - a).norm() / h - 1e-9)));
    for (int k = 0; k < m; ++k) pts.push_back(a + (b - a) * (static_cast<double>(k) / m));
  }
  return pts;
}

}  // namespace

Mesh generate_annulus(const ShapeSpec& outer, const ShapeSpec& obstacle, double h) {
  if (!(h > 0.0)) throw InvalidArgument("generate_annulus: h must be positive");
  const Vec2 c = shape_center(obstacle);
  const auto r_in = radial_of(obstacle, c, "obstacle");
  const auto r_out = radial_of(outer, c, "outer");

  double min_gap = 1e300, mean_gap = 0.0;
  const int probes = 720;
  for (int k = 0; k < probes; ++k) {
    const double th = 2.0 * kPi * k / probes;
    const double gap = r_out(th) - r_in(th);
    min_gap = std::min(min_gap, gap);
    mean_gap += gap / probes;
  }
  if (!(min_gap > 0.0)) throw GeometryError("obstacle is not strictly inside the outer boundary");
  if (min_gap < 0.5 * h) throw GeometryError("obstacle comes closer than h/2 to the outer boundary");

  const int layers = std::max(1, static_cast<int>(std::ceil(mean_gap / h - 1e-9)));
  std::vector<Vec2> nodes;
  std::vector<std::vector<Index>> rings;
  auto add_ring = [&](const std::vector<Vec2>& pts) {
    std::vector<Index> ring;
    for (const auto& p : pts) {
      ring.push_back(static_cast<Index>(nodes.size()));
      nodes.push_back(p);
    }
    rings.push_back(detail::start_at_angle_zero(std::move(ring), nodes, c));
  };
  add_ring(boundary_points(obstacle, r_in, c, h));
  std::vector<Index> movable;
  for (int l = 1; l < layers; ++l) {
    const double s = static_cast<double>(l) / layers;
    detail::RadialFn r = [&, s](double th) { return (1.0 - s) * r_in(th) + s * r_out(th); };
    const int n = std::max(8, static_cast<int>(std::round(detail::radial_perimeter(r, c) / h)));
    const Index before = static_cast<Index>(nodes.size());
    add_ring(detail::sample_radial(r, c, n));
    for (Index v = before; v < static_cast<Index>(nodes.size()); ++v) movable.push_back(v);
  }
  add_ring(boundary_points(outer, r_out, c, h));

  std::vector<Triangle> tris;
  for (std::size_t l = 0; l + 1 < rings.size(); ++l) {
    auto ring_tris = detail::zipper(rings[l], rings[l + 1], nodes);
    tris.insert(tris.end(), ring_tris.begin(), ring_tris.end());
  }
  detail::smooth(nodes, tris, movable, 5);

  std::vector<BoundaryEdge> edges;
  const auto& inner = rings.front();
  for (std::size_t j = 0; j < inner.size(); ++j) {
    edges.push_back({{inner[j], inner[(j + 1) % inner.size()]}, BoundaryTag::Obstacle});
  }
  const auto& rim = rings.back();
  for (std::size_t j = 0; j < rim.size(); ++j) edges.push_back({{rim[j], rim[(j + 1) % rim.size()]}, BoundaryTag::Outer});
  return Mesh(std::move(nodes), std::move(tris), std::move(edges));
}

}  // namespace helmopt
