#pragma once

#include "helmopt/mesh.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace helmopt {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Nodal P1 function. Values at every node; `name` is used for export.
struct Field {
  Vector values;
  std::string name;

  Field() = default;
  Field(Vector v, std::string n) : values(std::move(v)), name(std::move(n)) {}
};

/// Scalar coefficient: analytic closure, nodal P1 values, or one constant
/// per triangle.
class ScalarData {
 public:
  ScalarData() : fn_([](const Vec2&) { return 0.0; }), zero_(true) {}
  static ScalarData constant(double c);
  static ScalarData analytic(ScalarFn fn);
  static ScalarData nodal(Vector values);
  static ScalarData per_element(Vector values);

  /// Value at the point with barycentric coordinates `bc` in triangle `t`.
  double eval(const Mesh& mesh, Index t, const std::array<double, 3>& bc) const;
  /// Value at node `i` (analytic: evaluated there; per-element: angle-free
  /// average of the incident triangles).
  double at_node(const Mesh& mesh, Index i) const;
  bool is_zero() const { return zero_; }

 private:
  enum class Kind { Analytic, Nodal, Element } kind_ = Kind::Analytic;
  ScalarFn fn_;
  Vector values_;
  bool zero_ = false;
};

/// Vector coefficient with the same three representations.
class VectorData {
 public:
  VectorData() : fn_([](const Vec2&) { return Vec2(Vec2::Zero()); }), zero_(true) {}
  static VectorData constant(const Vec2& c);
  static VectorData analytic(VectorFn fn);
  static VectorData nodal(std::vector<Vec2> values);
  static VectorData per_element(std::vector<Vec2> values);

  Vec2 eval(const Mesh& mesh, Index t, const std::array<double, 3>& bc) const;
  Vec2 at_node(const Mesh& mesh, Index i) const;
  bool is_zero() const { return zero_; }

 private:
  enum class Kind { Analytic, Nodal, Element } kind_ = Kind::Analytic;
  VectorFn fn_;
  std::vector<Vec2> values_;
  bool zero_ = false;
};

/// Barycentric coordinates of the three edge midpoints of a triangle; the
/// rule with weights |T|/3 is exact for quadratics.
inline constexpr std::array<std::array<double, 3>, 3> kEdgeMidpoints{{
    {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};

/// Gradients of the three hat functions on triangle `t`.
std::array<Vec2, 3> shape_gradients(const Mesh& mesh, Index t);

SparseMatrix assemble_stiffness(const Mesh& mesh);
SparseMatrix assemble_mass(const Mesh& mesh);
/// Mass matrix restricted to the triangles flagged in `mask`.
SparseMatrix assemble_mass(const Mesh& mesh, const std::vector<char>& mask);

/// Entries ∫ f φ_i with the edge-midpoint rule. Triangles with mask[t] == 0
/// are skipped when a mask is given.
Vector assemble_load(const Mesh& mesh, const ScalarData& f, const std::vector<char>* mask = nullptr);
/// Entries ∫ A·∇φ_i with the same rule.
Vector assemble_vector_load(const Mesh& mesh, const VectorData& a);

/// Element-constant gradient of a P1 field.
std::vector<Vec2> element_gradients(const Mesh& mesh, const Vector& u);
Vector interpolate(const Mesh& mesh, const ScalarFn& fn);

/// Value and gradient of a P1 field at an arbitrary point of the mesh.
double evaluate_at(const Mesh& mesh, const Vector& u, const Vec2& p);
Vec2 gradient_at(const Mesh& mesh, const Vector& u, const Vec2& p);

struct EssentialBC {
  std::vector<std::pair<Index, double>> values;  // sorted by node, unique
};

/// Homogeneous (or prescribed) values on every node carrying one of `tags`.
EssentialBC dirichlet_bc(const Mesh& mesh, const std::vector<BoundaryTag>& tags, const ScalarFn& value = {});

/// Symmetric elimination of essential conditions.
struct ReducedSystem {
  SparseMatrix matrix;
  Vector rhs;
  std::vector<Index> free_dofs;  // reduced index -> node
  std::vector<Index> reduced;    // node -> reduced index, -1 if constrained
  Vector prescribed;             // full-length, prescribed values (0 elsewhere)

  Vector expand(const Vector& x) const;
  Vector restrict_vector(const Vector& full) const;
};

ReducedSystem apply_dirichlet(const SparseMatrix& op, const Vector& rhs, const EssentialBC& bc,
                              const Mesh* mesh = nullptr);
/// Reduction pattern only (free/constrained split) for homogeneous conditions.
ReducedSystem reduce_pattern(const SparseMatrix& op, const EssentialBC& bc);

/// Boundary nodes of all loops carrying `tag`, loop by loop.
std::vector<Index> boundary_nodes(const Mesh& mesh, BoundaryTag tag);

/// Trapezoidal ∫ density dσ over the loops tagged `tag`; density is a
/// full-length nodal vector (only boundary entries are read).
double boundary_integral(const Mesh& mesh, BoundaryTag tag, const Vector& density);

/// Angle-weighted average of element gradients at every node of `tag`
/// (zero elsewhere).
std::vector<Vec2> averaged_boundary_gradient(const Mesh& mesh, BoundaryTag tag, const Vector& u);

/// ∂u/∂n at the nodes of `tag`: averaged element gradient dotted with the node normal.
Vector normal_derivative(const Mesh& mesh, BoundaryTag tag, const Vector& u);

/// Centered difference (s_{i+1} - s_{i-1}) / (l_{i-1} + l_i) along each loop.
Vector tangential_gradient(const Mesh& mesh, BoundaryTag tag, const Vector& s);

/// Second tangential difference along each loop (discrete Laplace–Beltrami).
Vector tangential_laplacian(const Mesh& mesh, BoundaryTag tag, const Vector& s);

/// Boundary gradient with the tangential part from the trace (centered
/// difference) and the normal part from the averaged element gradient.
std::vector<Vec2> boundary_gradient(const Mesh& mesh, BoundaryTag tag, const Vector& u);

double l2_norm(const Mesh& mesh, const Vector& u);
double h1_norm(const Mesh& mesh, const Vector& u);
double l2_norm(const SparseMatrix& mass, const Vector& u);
double h1_norm(const SparseMatrix& stiffness, const SparseMatrix& mass, const Vector& u);

/// Extends boundary displacements to the interior by solving a discrete
/// Laplace problem per component. `fixed[i]` marks nodes whose value is
/// prescribed by `values[i]` (all boundary nodes must be fixed).
/// With stiffening s > 0 each element's Laplacian is weighted by
/// (mean area / area)^s, so small elements move more rigidly.
std::vector<Vec2> harmonic_extension(const Mesh& mesh, const std::vector<Vec2>& values, const std::vector<char>& fixed,
                                     double stiffening = 0.0);

}  // namespace helmopt
