#include "helmopt/fem.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace helmopt {

// ---------------------------------------------------------------------------
// coefficient data

ScalarData ScalarData::constant(double c) {
  ScalarData d = analytic([c](const Vec2&) { return c; });
  d.zero_ = (c == 0.0);
  return d;
}

ScalarData ScalarData::analytic(ScalarFn fn) {
  ScalarData d;
  d.kind_ = Kind::Analytic;
  d.fn_ = std::move(fn);
  d.zero_ = false;
  return d;
}

ScalarData ScalarData::nodal(Vector values) {
  ScalarData d;
  d.kind_ = Kind::Nodal;
  d.zero_ = values.size() > 0 && values.cwiseAbs().maxCoeff() == 0.0;
  d.values_ = std::move(values);
  d.fn_ = {};
  return d;
}

ScalarData ScalarData::per_element(Vector values) {
  ScalarData d = nodal(std::move(values));
  d.kind_ = Kind::Element;
  return d;
}

double ScalarData::eval(const Mesh& mesh, Index t, const std::array<double, 3>& bc) const {
  switch (kind_) {
    case Kind::Analytic: {
      const auto& tri = mesh.triangle(t);
      const Vec2 x = bc[0] * mesh.node(tri[0]) + bc[1] * mesh.node(tri[1]) + bc[2] * mesh.node(tri[2]);
      const double v = fn_(x);
      if (!std::isfinite(v)) throw EvaluationError("coefficient evaluates to a non-finite value");
      return v;
    }
    case Kind::Nodal: {
      if (values_.size() != mesh.num_nodes()) throw InvalidArgument("nodal coefficient size does not match the mesh");
      const auto& tri = mesh.triangle(t);
      return bc[0] * values_[tri[0]] + bc[1] * values_[tri[1]] + bc[2] * values_[tri[2]];
    }
    case Kind::Element:
      if (values_.size() != mesh.num_triangles()) {
        throw InvalidArgument("per-element coefficient size does not match the mesh");
      }
      return values_[t];
  }
  return 0.0;
}

double ScalarData::at_node(const Mesh& mesh, Index i) const {
  switch (kind_) {
    case Kind::Analytic:
      return fn_(mesh.node(i));
    case Kind::Nodal:
      if (values_.size() != mesh.num_nodes()) throw InvalidArgument("nodal coefficient size does not match the mesh");
      return values_[i];
    case Kind::Element: {
      const auto& tris = mesh.node_triangles()[i];
      double s = 0.0;
      for (Index t : tris) s += values_[t];
      return s / static_cast<double>(tris.size());
    }
  }
  return 0.0;
}

VectorData VectorData::constant(const Vec2& c) {
  VectorData d = analytic([c](const Vec2&) { return c; });
  d.zero_ = c.isZero(0.0);
  return d;
}

VectorData VectorData::analytic(VectorFn fn) {
  VectorData d;
  d.kind_ = Kind::Analytic;
  d.fn_ = std::move(fn);
  d.zero_ = false;
  return d;
}

VectorData VectorData::nodal(std::vector<Vec2> values) {
  VectorData d;
  d.kind_ = Kind::Nodal;
  d.zero_ = std::all_of(values.begin(), values.end(), [](const Vec2& v) { return v.isZero(0.0); });
  d.values_ = std::move(values);
  d.fn_ = {};
  return d;
}

VectorData VectorData::per_element(std::vector<Vec2> values) {
  VectorData d = nodal(std::move(values));
  d.kind_ = Kind::Element;
  return d;
}

Vec2 VectorData::eval(const Mesh& mesh, Index t, const std::array<double, 3>& bc) const {
  switch (kind_) {
    case Kind::Analytic: {
      const auto& tri = mesh.triangle(t);
      const Vec2 x = bc[0] * mesh.node(tri[0]) + bc[1] * mesh.node(tri[1]) + bc[2] * mesh.node(tri[2]);
      const Vec2 v = fn_(x);
      if (!v.allFinite()) throw EvaluationError("vector coefficient evaluates to a non-finite value");
      return v;
    }
    case Kind::Nodal: {
      if (values_.size() != static_cast<std::size_t>(mesh.num_nodes())) {
        throw InvalidArgument("nodal vector coefficient size does not match the mesh");
      }
      const auto& tri = mesh.triangle(t);
      return bc[0] * values_[tri[0]] + bc[1] * values_[tri[1]] + bc[2] * values_[tri[2]];
    }
    case Kind::Element:
      if (values_.size() != static_cast<std::size_t>(mesh.num_triangles())) {
        throw InvalidArgument("per-element vector coefficient size does not match the mesh");
      }
      return values_[t];
  }
  return Vec2::Zero();
}

Vec2 VectorData::at_node(const Mesh& mesh, Index i) const {
  switch (kind_) {
    case Kind::Analytic:
      return fn_(mesh.node(i));
    case Kind::Nodal:
      return values_[i];
    case Kind::Element: {
      const auto& tris = mesh.node_triangles()[i];
      Vec2 s = Vec2::Zero();
      for (Index t : tris) s += values_[t];
      return s / static_cast<double>(tris.size());
    }
  }
  return Vec2::Zero();
}

// ---------------------------------------------------------------------------
// assembly

std::array<Vec2, 3> shape_gradients(const Mesh& mesh, Index t) {
  const auto& tri = mesh.triangle(t);
  const Vec2& a = mesh.node(tri[0]);
  const Vec2& b = mesh.node(tri[1]);
  const Vec2& c = mesh.node(tri[2]);
  const double area2 = cross(b - a, c - a);
  if (!(area2 > 0.0)) throw AssemblyError("degenerate triangle " + std::to_string(t));
  // ∇φ_i = rot(opposite edge) / 2|T|
  auto rot = [](const Vec2& e) { return Vec2(-e.y(), e.x()); };
  return {rot(c - b) / area2, rot(a - c) / area2, rot(b - a) / area2};
}

namespace {

double checked_area(const Mesh& mesh, Index t) {
  const double area = mesh.signed_area(t);
  if (!(area > 0.0)) throw AssemblyError("degenerate triangle " + std::to_string(t));
  return area;
}

}  // namespace

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const double area = checked_area(mesh, t);
    const auto g = shape_gradients(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], area * g[i].dot(g[j]));
    }
  }
  SparseMatrix k(mesh.num_nodes(), mesh.num_nodes());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

SparseMatrix assemble_mass(const Mesh& mesh, const std::vector<char>& mask) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    if (!mask.empty() && !mask[t]) continue;
    const double area = checked_area(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], area * (i == j ? 2.0 : 1.0) / 12.0);
    }
  }
  SparseMatrix m(mesh.num_nodes(), mesh.num_nodes());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix assemble_mass(const Mesh& mesh) { return assemble_mass(mesh, std::vector<char>{}); }

Vector assemble_load(const Mesh& mesh, const ScalarData& f, const std::vector<char>* mask) {
  Vector load = Vector::Zero(mesh.num_nodes());
  if (f.is_zero()) return load;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    if (mask && !(*mask)[t]) continue;
    const double w = checked_area(mesh, t) / 3.0;
    const auto& tri = mesh.triangle(t);
    for (const auto& bc : kEdgeMidpoints) {
      const double fv = f.eval(mesh, t, bc) * w;
      for (int i = 0; i < 3; ++i) load[tri[i]] += fv * bc[i];
    }
  }
  return load;
}

Vector assemble_vector_load(const Mesh& mesh, const VectorData& a) {
  Vector load = Vector::Zero(mesh.num_nodes());
  if (a.is_zero()) return load;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const double w = checked_area(mesh, t) / 3.0;
    Vec2 integral = Vec2::Zero();
    for (const auto& bc : kEdgeMidpoints) integral += w * a.eval(mesh, t, bc);
    const auto g = shape_gradients(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) load[tri[i]] += integral.dot(g[i]);
  }
  return load;
}

std::vector<Vec2> element_gradients(const Mesh& mesh, const Vector& u) {
  if (u.size() != mesh.num_nodes()) throw InvalidArgument("field size does not match the mesh");
  std::vector<Vec2> out(static_cast<std::size_t>(mesh.num_triangles()));
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = shape_gradients(mesh, t);
    const auto& tri = mesh.triangle(t);
    out[t] = u[tri[0]] * g[0] + u[tri[1]] * g[1] + u[tri[2]] * g[2];
  }
  return out;
}

Vector interpolate(const Mesh& mesh, const ScalarFn& fn) {
  Vector u(mesh.num_nodes());
  for (Index i = 0; i < mesh.num_nodes(); ++i) u[i] = fn(mesh.node(i));
  return u;
}

double evaluate_at(const Mesh& mesh, const Vector& u, const Vec2& p) {
  const Index t = mesh.locate(p);
  if (t < 0) throw EvaluationError("point lies outside the mesh");
  const auto bc = mesh.barycentric(t, p);
  const auto& tri = mesh.triangle(t);
  return bc[0] * u[tri[0]] + bc[1] * u[tri[1]] + bc[2] * u[tri[2]];
}

Vec2 gradient_at(const Mesh& mesh, const Vector& u, const Vec2& p) {
  const Index t = mesh.locate(p);
  if (t < 0) throw EvaluationError("point lies outside the mesh");
  // average over all triangles sharing the location (vertex or edge hits)
  Vec2 sum = Vec2::Zero();
  int count = 0;
  const auto& tri0 = mesh.triangle(t);
  for (Index v : tri0) {
    for (Index s : mesh.node_triangles()[v]) {
      const auto bc = mesh.barycentric(s, p);
      if (std::min({bc[0], bc[1], bc[2]}) < -1e-10) continue;
      const auto g = shape_gradients(mesh, s);
      const auto& tri = mesh.triangle(s);
      sum += u[tri[0]] * g[0] + u[tri[1]] * g[1] + u[tri[2]] * g[2];
      ++count;
    }
  }
  return count > 0 ? Vec2(sum / count) : Vec2::Zero();
}

// ---------------------------------------------------------------------------
// essential conditions

EssentialBC dirichlet_bc(const Mesh& mesh, const std::vector<BoundaryTag>& tags, const ScalarFn& value) {
  EssentialBC bc;
  for (Index i = 0; i < mesh.num_nodes(); ++i) {
    const auto tag = mesh.node_tag(i);
    if (!tag) continue;
    if (std::find(tags.begin(), tags.end(), *tag) == tags.end()) continue;
    bc.values.emplace_back(i, value ? value(mesh.node(i)) : 0.0);
  }
  return bc;
}

Vector ReducedSystem::expand(const Vector& x) const {
  Vector full = prescribed;
  for (std::size_t k = 0; k < free_dofs.size(); ++k) full[free_dofs[k]] = x[static_cast<Index>(k)];
  return full;
}

Vector ReducedSystem::restrict_vector(const Vector& full) const {
  Vector r(static_cast<Index>(free_dofs.size()));
  for (std::size_t k = 0; k < free_dofs.size(); ++k) r[static_cast<Index>(k)] = full[free_dofs[k]];
  return r;
}

ReducedSystem reduce_pattern(const SparseMatrix& op, const EssentialBC& bc) {
  const Index n = static_cast<Index>(op.rows());
  ReducedSystem sys;
  sys.prescribed = Vector::Zero(n);
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (const auto& [node, value] : bc.values) {
    if (node < 0 || node >= n) throw BcError("constrained node " + std::to_string(node) + " out of range");
    if (fixed[node]) throw BcError("node " + std::to_string(node) + " constrained twice");
    fixed[node] = 1;
    sys.prescribed[node] = value;
  }
  sys.reduced.assign(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < n; ++i) {
    if (fixed[i]) continue;
    sys.reduced[i] = static_cast<Index>(sys.free_dofs.size());
    sys.free_dofs.push_back(i);
  }
  const Index m = static_cast<Index>(sys.free_dofs.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(op.nonZeros()));
  for (Index col = 0; col < op.outerSize(); ++col) {
    const Index rc = sys.reduced[col];
    if (rc < 0) continue;
    for (SparseMatrix::InnerIterator it(op, col); it; ++it) {
      const Index rr = sys.reduced[static_cast<Index>(it.row())];
      if (rr >= 0) trip.emplace_back(rr, rc, it.value());
    }
  }
  sys.matrix.resize(m, m);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

ReducedSystem apply_dirichlet(const SparseMatrix& op, const Vector& rhs, const EssentialBC& bc, const Mesh* mesh) {
  if (mesh) {
    for (const auto& [node, value] : bc.values) {
      if (node < 0 || node >= mesh->num_nodes() || !mesh->is_boundary_node(node)) {
        throw BcError("essential condition on node " + std::to_string(node) + " which is not a boundary node");
      }
    }
  }
  ReducedSystem sys = reduce_pattern(op, bc);
  // rhs correction: b_free - A_{free,fixed} g
  const Vector lift = op * sys.prescribed;
  sys.rhs = sys.restrict_vector(rhs - lift);
  return sys;
}

// ---------------------------------------------------------------------------
// boundary calculus

std::vector<Index> boundary_nodes(const Mesh& mesh, BoundaryTag tag) {
  std::vector<Index> out;
  for (const auto& loop : mesh.loops(tag)) out.insert(out.end(), loop.nodes.begin(), loop.nodes.end());
  return out;
}

double boundary_integral(const Mesh& mesh, BoundaryTag tag, const Vector& density) {
  if (density.size() != mesh.num_nodes()) throw InvalidArgument("boundary density must be a full nodal vector");
  double sum = 0.0;
  for (const auto& loop : mesh.loops(tag)) {
    const std::size_t n = loop.nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Index a = loop.nodes[i];
      const Index b = loop.nodes[(i + 1) % n];
      sum += 0.5 * (mesh.node(b) - mesh.node(a)).norm() * (density[a] + density[b]);
    }
  }
  return sum;
}

namespace {

double corner_angle(const Mesh& mesh, Index t, Index node) {
  const auto& tri = mesh.triangle(t);
  int k = 0;
  while (tri[k] != node) ++k;
  const Vec2 u = mesh.node(tri[(k + 1) % 3]) - mesh.node(node);
  const Vec2 v = mesh.node(tri[(k + 2) % 3]) - mesh.node(node);
  return std::atan2(std::abs(cross(u, v)), u.dot(v));
}

Vec2 averaged_gradient_at(const Mesh& mesh, Index node, const std::vector<Vec2>& grads) {
  Vec2 sum = Vec2::Zero();
  double wsum = 0.0;
  for (Index t : mesh.node_triangles()[node]) {
    const double w = corner_angle(mesh, t, node);
    sum += w * grads[t];
    wsum += w;
  }
  return sum / wsum;
}

}  // namespace

std::vector<Vec2> averaged_boundary_gradient(const Mesh& mesh, BoundaryTag tag, const Vector& u) {
  const auto grads = element_gradients(mesh, u);
  std::vector<Vec2> out(static_cast<std::size_t>(mesh.num_nodes()), Vec2::Zero());
  for (Index i : boundary_nodes(mesh, tag)) out[i] = averaged_gradient_at(mesh, i, grads);
  return out;
}

Vector normal_derivative(const Mesh& mesh, BoundaryTag tag, const Vector& u) {
  const auto grads = element_gradients(mesh, u);
  const auto geo = boundary_geometry(mesh, tag);
  Vector out = Vector::Zero(mesh.num_nodes());
  for (const auto& lg : geo.loops) {
    for (std::size_t i = 0; i < lg.loop.nodes.size(); ++i) {
      const Index v = lg.loop.nodes[i];
      out[v] = averaged_gradient_at(mesh, v, grads).dot(lg.node_normal[i]);
    }
  }
  return out;
}

Vector tangential_gradient(const Mesh& mesh, BoundaryTag tag, const Vector& s) {
  if (s.size() != mesh.num_nodes()) throw InvalidArgument("boundary data must be a full nodal vector");
  Vector out = Vector::Zero(mesh.num_nodes());
  for (const auto& loop : mesh.loops(tag)) {
    const std::size_t n = loop.nodes.size();
    if (n < 3) throw GeometryError("boundary loop with fewer than three nodes");
    for (std::size_t i = 0; i < n; ++i) {
      const Index prev = loop.nodes[(i + n - 1) % n];
      const Index cur = loop.nodes[i];
      const Index next = loop.nodes[(i + 1) % n];
      const double span = (mesh.node(cur) - mesh.node(prev)).norm() + (mesh.node(next) - mesh.node(cur)).norm();
      out[cur] = (s[next] - s[prev]) / span;
    }
  }
  return out;
}

Vector tangential_laplacian(const Mesh& mesh, BoundaryTag tag, const Vector& s) {
  Vector out = Vector::Zero(mesh.num_nodes());
  for (const auto& loop : mesh.loops(tag)) {
    const std::size_t n = loop.nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Index prev = loop.nodes[(i + n - 1) % n];
      const Index cur = loop.nodes[i];
      const Index next = loop.nodes[(i + 1) % n];
      const double l0 = (mesh.node(cur) - mesh.node(prev)).norm();
      const double l1 = (mesh.node(next) - mesh.node(cur)).norm();
      out[cur] = ((s[next] - s[cur]) / l1 - (s[cur] - s[prev]) / l0) / (0.5 * (l0 + l1));
    }
  }
  return out;
}

std::vector<Vec2> boundary_gradient(const Mesh& mesh, BoundaryTag tag, const Vector& u) {
  const auto grads = element_gradients(mesh, u);
  const auto geo = boundary_geometry(mesh, tag);
  const Vector dt = tangential_gradient(mesh, tag, u);
  std::vector<Vec2> out(static_cast<std::size_t>(mesh.num_nodes()), Vec2::Zero());
  for (const auto& lg : geo.loops) {
    for (std::size_t i = 0; i < lg.loop.nodes.size(); ++i) {
      const Index v = lg.loop.nodes[i];
      const double dn = averaged_gradient_at(mesh, v, grads).dot(lg.node_normal[i]);
      out[v] = dn * lg.node_normal[i] + dt[v] * lg.node_tangent[i];
    }
  }
  return out;
}

double l2_norm(const SparseMatrix& mass, const Vector& u) { return std::sqrt(std::max(0.0, u.dot(mass * u))); }

double h1_norm(const SparseMatrix& stiffness, const SparseMatrix& mass, const Vector& u) {
  return std::sqrt(std::max(0.0, u.dot(stiffness * u) + u.dot(mass * u)));
}

double l2_norm(const Mesh& mesh, const Vector& u) { return l2_norm(assemble_mass(mesh), u); }

double h1_norm(const Mesh& mesh, const Vector& u) {
  return h1_norm(assemble_stiffness(mesh), assemble_mass(mesh), u);
}

std::vector<Vec2> harmonic_extension(const Mesh& mesh, const std::vector<Vec2>& values, const std::vector<char>& fixed,
                                     double stiffening) {
  const auto n = static_cast<std::size_t>(mesh.num_nodes());
  if (values.size() != n || fixed.size() != n) throw InvalidArgument("harmonic_extension: size mismatch");
  EssentialBC bc;
  for (Index i = 0; i < mesh.num_nodes(); ++i) {
    if (fixed[i]) bc.values.emplace_back(i, 0.0);
    else if (mesh.is_boundary_node(i)) throw InvalidArgument("harmonic_extension: every boundary node must be fixed");
  }
  SparseMatrix k;
  if (stiffening > 0.0) {
    const double mean_area = mesh.total_area() / static_cast<double>(mesh.num_triangles());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(9 * mesh.num_triangles()));
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
      const double area = mesh.signed_area(t);
      const double w = area * std::pow(mean_area / area, stiffening);
      const auto grads = shape_gradients(mesh, t);
      const auto& tri = mesh.triangle(t);
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) trip.emplace_back(tri[a], tri[b], w * grads[a].dot(grads[b]));
      }
    }
    k.resize(mesh.num_nodes(), mesh.num_nodes());
    k.setFromTriplets(trip.begin(), trip.end());
  } else {
    k = assemble_stiffness(mesh);
  }
  ReducedSystem sys = reduce_pattern(k, bc);
  std::vector<Vec2> out(values);
  if (sys.free_dofs.empty()) return out;
  Eigen::SimplicialLDLT<SparseMatrix> solver(sys.matrix);
  if (solver.info() != Eigen::Success) throw SolverError("harmonic extension factorization failed");
  for (int c = 0; c < 2; ++c) {
    Vector g = Vector::Zero(mesh.num_nodes());
    for (Index i = 0; i < mesh.num_nodes(); ++i) {
      if (fixed[i]) g[i] = values[i][c];
    }
    const Vector rhs = sys.restrict_vector(-(k * g));
    const Vector x = solver.solve(rhs);
    for (std::size_t r = 0; r < sys.free_dofs.size(); ++r) out[sys.free_dofs[r]][c] = x[static_cast<Index>(r)];
  }
  return out;
}

}  // namespace helmopt
