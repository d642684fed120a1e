#pragma once

// Helpers shared by the mesh generators and the hole puncher. Everything here
// works on closed curves that are star-shaped about a fixed center.

#include "helmopt/mesh.hpp"

#include <functional>
#include <vector>

namespace helmopt::detail {

/// Radius of a star-shaped curve as a function of polar angle about a center.
using RadialFn = std::function<double(double)>;

double polar_angle(const Vec2& p, const Vec2& center);  // in [0, 2π)

/// Distance from `center` along direction θ to the polygon boundary; the
/// polygon must be star-shaped about `center`.
double ray_polygon(const std::vector<Vec2>& poly, const Vec2& center, double theta);
/// Same for a circle; `center` must lie inside it.
double ray_circle(const Vec2& circle_center, double radius, const Vec2& center, double theta);

/// True when every edge of the CCW polygon is seen from `center` with a
/// positive turning angle.
bool is_star_shaped(const std::vector<Vec2>& poly, const Vec2& center, double tol = 0.0);

/// Perimeter of the curve r(θ) by dense sampling.
double radial_perimeter(const RadialFn& r, const Vec2& center);

/// `count` points on the curve r(θ), uniformly spaced in arclength, the
/// first one on the ray θ = 0. Points lie exactly on the curve.
std::vector<Vec2> sample_radial(const RadialFn& r, const Vec2& center, int count);

/// Rotates a CCW loop so that it starts at the node with the smallest polar angle.
std::vector<Index> start_at_angle_zero(std::vector<Index> loop, const std::vector<Vec2>& nodes,
                                       const Vec2& center);

/// Fills the ring between two CCW loops (both starting near angle 0) with
/// triangles, choosing the shorter diagonal at each step.
std::vector<Triangle> zipper(const std::vector<Index>& inner, const std::vector<Index>& outer,
                             const std::vector<Vec2>& nodes);

/// Min interior angle of a single triangle, in degrees.
double triangle_min_angle_deg(const Vec2& a, const Vec2& b, const Vec2& c);

/// Jacobi-style Laplacian smoothing of the `movable` nodes. A sweep is kept
/// only if it raises the smallest angle of `tris`.
void smooth(std::vector<Vec2>& nodes, const std::vector<Triangle>& tris, const std::vector<Index>& movable,
            int sweeps);

/// Alternates Delaunay edge flips (edges shared by two triangles of `tris`)
/// with per-node smoothing of `movable`. A node move is kept only when it
/// raises the smallest angle of the triangles around it.
/// Edges joining two `locked` nodes are never flipped away or created, and
/// triangles before `first_flippable` keep their connectivity.
void improve_triangulation(std::vector<Vec2>& nodes, std::vector<Triangle>& tris, const std::vector<Index>& movable,
                           const std::vector<char>& locked, int rounds, std::size_t first_flippable = 0);

/// Like zipper, but advances along whichever ring has the smaller next polar
/// angle about `center`.
std::vector<Triangle> angular_zipper(const std::vector<Index>& inner, const std::vector<Index>& outer,
                                     const std::vector<Vec2>& nodes, const Vec2& center);

}  // namespace helmopt::detail
