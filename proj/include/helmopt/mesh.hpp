#pragma once

#include "helmopt/common.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace helmopt {

enum class BoundaryTag { Outer = 0, Obstacle = 1, Hole = 2 };

std::string to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& name);

using Triangle = std::array<Index, 3>;

struct BoundaryEdge {
  std::array<Index, 2> nodes;
  BoundaryTag tag = BoundaryTag::Outer;
};

/// Closed chain of boundary nodes. Edge i runs nodes[i] -> nodes[i+1 mod n]
/// with the computational domain on its left.
struct BoundaryLoop {
  BoundaryTag tag = BoundaryTag::Outer;
  std::vector<Index> nodes;
};

/// Immutable 2D triangulation with tagged boundary loops.
///
/// Construction validates the invariants: counterclockwise triangles with
/// strictly positive area, in-range indices, every topological boundary edge
/// tagged exactly once, and closed loops per tag. Boundary edges are
/// re-oriented so the domain lies on their left.
class Mesh {
 public:
  Mesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
       std::vector<BoundaryEdge> boundary_edges);

  /// Builds a mesh from nodes and triangles; topological boundary edges not
  /// listed in `tagged` get `default_tag`. Clockwise triangles are flipped.
  static Mesh from_triangles(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
                             const std::vector<BoundaryEdge>& tagged = {},
                             BoundaryTag default_tag = BoundaryTag::Outer);

  static constexpr int dimension = 2;

  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return edges_; }
  const Vec2& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Triangle& triangle(Index t) const { return triangles_[static_cast<std::size_t>(t)]; }

  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }

  double signed_area(Index t) const;
  double total_area() const;
  Vec2 centroid(Index t) const;
  double max_edge_length() const;
  /// Smallest interior angle over all triangles, in degrees.
  double min_angle_deg() const;

  bool has_tag(BoundaryTag tag) const;
  std::vector<BoundaryTag> tags() const;
  /// Loops carrying `tag`; throws LookupError when the tag is absent.
  const std::vector<BoundaryLoop>& loops(BoundaryTag tag) const;
  const std::vector<BoundaryLoop>& all_loops() const { return loops_; }
  /// Tag of node `i` if it lies on the boundary.
  std::optional<BoundaryTag> node_tag(Index i) const;
  bool is_boundary_node(Index i) const { return node_tag(i).has_value(); }

  /// Triangles incident to each node.
  const std::vector<std::vector<Index>>& node_triangles() const { return node_tris_; }

  /// Index of a triangle containing `p` (with barycentric tolerance), or -1.
  Index locate(const Vec2& p) const;
  /// Barycentric coordinates of `p` in triangle `t`.
  std::array<double, 3> barycentric(Index t, const Vec2& p) const;

  /// Copy with the same connectivity and tags but new coordinates.
  Mesh with_nodes(std::vector<Vec2> nodes) const;

 private:
  std::vector<Vec2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> edges_;
  std::vector<BoundaryLoop> loops_;
  std::vector<std::vector<BoundaryLoop>> loops_by_tag_;
  std::vector<int> node_tag_;  // -1 for interior nodes
  std::vector<std::vector<Index>> node_tris_;

  void build_loops();
};

/// Displacement direction V used by φ_t(x) = x + tV(x).
class VelocityField {
 public:
  static VelocityField analytic(VectorFn fn, std::string name);
  static VelocityField nodal(std::vector<Vec2> values, std::string name);

  static VelocityField zero();
  static VelocityField translation(const Vec2& direction);
  /// V(x) = x - center.
  static VelocityField dilation(const Vec2& center = Vec2::Zero());
  /// V(x) = J (x - center), J the quarter-turn.
  static VelocityField rotation(const Vec2& center = Vec2::Zero());
  /// Area-preserving stretch V(x) = (x - cx, -(y - cy)).
  static VelocityField stretch(const Vec2& center = Vec2::Zero());

  bool is_nodal() const { return std::holds_alternative<std::vector<Vec2>>(data_); }
  const std::string& name() const { return name_; }

  /// Value per mesh node; throws InvalidArgument on a nodal size mismatch.
  std::vector<Vec2> sample(const class Mesh& mesh) const;

 private:
  std::variant<VectorFn, std::vector<Vec2>> data_;
  std::string name_;
};

/// Reference hole ω_ε(x₀) = x₀ + εω with ω the unit disk.
struct HoleSpec {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double cap_omega = 1.0;
  double mes_omega = kPi;
};

struct ShapeSpec {
  struct Disk {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
  };
  struct Polygon {
    std::vector<Vec2> vertices;  // counterclockwise
  };
  std::variant<Disk, Polygon> shape;

  static ShapeSpec disk(const Vec2& center, double radius) { return {Disk{center, radius}}; }
  static ShapeSpec polygon(std::vector<Vec2> vertices) { return {Polygon{std::move(vertices)}}; }
  static ShapeSpec rectangle(const Vec2& lo, const Vec2& hi);
};

/// Structured "crossed" mesh of [0,width]x[0,height]: nx*ny cells of size
/// at most h, each split into four triangles around an added center node.
/// Node count (nx+1)(ny+1) + nx*ny, triangle count 4*nx*ny.
Mesh generate_rectangle(double width, double height, double h);

/// Concentric-ring disk mesh: ceil(R/h) rings, ring i holding 6i nodes,
/// boundary nodes exactly on the circle.
Mesh generate_disk(const Vec2& center, double radius, double h);

/// Mesh of outer \ obstacle with loops tagged Outer and Obstacle. Both shapes
/// must be star-shaped about the obstacle center.
Mesh generate_annulus(const ShapeSpec& outer, const ShapeSpec& obstacle, double h);

struct PunchedMesh {
  Mesh mesh;
  /// old node index -> new node index, -1 for removed nodes.
  std::vector<Index> node_map;
  /// new triangle index -> old triangle index, -1 for triangles created by
  /// the local remeshing.
  std::vector<Index> triangle_origin;
};

struct PunchOptions {
  double min_angle_deg = 15.0;
};

/// Removes the disk of `hole` from the mesh and remeshes a small cavity
/// around it; the new loop is tagged Hole. Triangles outside the cavity are
/// kept unchanged.
PunchedMesh punch_hole(const Mesh& mesh, const HoleSpec& hole, const PunchOptions& options = {});

/// Typical edge length near `p`: longest edge among triangles within `radius`.
double local_mesh_size(const Mesh& mesh, const Vec2& p, double radius = 0.0);

/// Moves every node x to x + tV(x); connectivity and tags unchanged.
Mesh deform(const Mesh& mesh, const VelocityField& velocity, double t);
Mesh deform(const Mesh& mesh, const std::vector<Vec2>& displacement_direction, double t);

struct LoopGeometry {
  BoundaryLoop loop;
  std::vector<Vec2> edge_normal;    // outward unit normal of edge i
  std::vector<double> edge_length;  // |x_{i+1} - x_i|
  std::vector<Vec2> node_normal;    // normalized bisector of adjacent edge normals
  std::vector<Vec2> node_tangent;   // node_normal rotated so the domain is on the left
  std::vector<double> node_weight;  // (l_{i-1} + l_i) / 2, trapezoidal weight
  std::vector<double> curvature;    // signed, positive where the domain is locally convex
};

struct BoundaryGeometry {
  BoundaryTag tag = BoundaryTag::Outer;
  std::vector<LoopGeometry> loops;
};

/// Outward normals, lengths and curvature for every loop carrying `tag`.
BoundaryGeometry boundary_geometry(const Mesh& mesh, BoundaryTag tag);

}  // namespace helmopt
