#include "mesh_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace helmopt::detail {

double polar_angle(const Vec2& p, const Vec2& center) {
  double a = std::atan2(p.y() - center.y(), p.x() - center.x());
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

double ray_polygon(const std::vector<Vec2>& poly, const Vec2& center, double theta) {
  const Vec2 d(std::cos(theta), std::sin(theta));
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i] - center;
    const Vec2 e = poly[(i + 1) % n] - poly[i];
    const double den = cross(d, e);
    if (std::abs(den) < 1e-300) continue;
    const double t = cross(a, e) / den;
    const double u = cross(a, d) / den;
    if (t > 0.0 && u >= -1e-12 && u <= 1.0 + 1e-12) best = std::min(best, t);
  }
  if (!std::isfinite(best)) throw GeometryError("ray from the center does not hit the polygon");
  return best;
}

double ray_circle(const Vec2& circle_center, double radius, const Vec2& center, double theta) {
  const Vec2 d(std::cos(theta), std::sin(theta));
  const Vec2 w = center - circle_center;
  const double b = w.dot(d);
  const double c = w.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) throw GeometryError("ray from the center misses the circle");
  const double t = -b + std::sqrt(disc);
  if (t <= 0.0) throw GeometryError("center lies outside the circle");
  return t;
}

bool is_star_shaped(const std::vector<Vec2>& poly, const Vec2& center, double tol) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i] - center;
    const Vec2 b = poly[(i + 1) % n] - center;
    if (cross(a, b) <= tol * a.norm() * b.norm()) return false;
    total += std::atan2(cross(a, b), a.dot(b));
  }
  return std::abs(total - 2.0 * kPi) < 1e-6;
}

namespace {

constexpr int kDense = 4096;

Vec2 radial_point(const RadialFn& r, const Vec2& center, double theta) {
  return center + r(theta) * Vec2(std::cos(theta), std::sin(theta));
}

}  // namespace

double radial_perimeter(const RadialFn& r, const Vec2& center) {
  double len = 0.0;
  Vec2 prev = radial_point(r, center, 0.0);
  for (int k = 1; k <= kDense; ++k) {
    const Vec2 cur = radial_point(r, center, 2.0 * kPi * k / kDense);
    len += (cur - prev).norm();
    prev = cur;
  }
  return len;
}

std::vector<Vec2> sample_radial(const RadialFn& r, const Vec2& center, int count) {
  std::vector<double> theta(kDense + 1), arc(kDense + 1, 0.0);
  Vec2 prev = radial_point(r, center, 0.0);
  theta[0] = 0.0;
  for (int k = 1; k <= kDense; ++k) {
    theta[k] = 2.0 * kPi * k / kDense;
    const Vec2 cur = radial_point(r, center, theta[k]);
    arc[k] = arc[k - 1] + (cur - prev).norm();
    prev = cur;
  }
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(count));
  int seg = 0;
  for (int j = 0; j < count; ++j) {
    const double target = arc[kDense] * j / count;
    while (seg < kDense - 1 && arc[seg + 1] < target) ++seg;
    const double span = arc[seg + 1] - arc[seg];
    const double w = span > 0.0 ? (target - arc[seg]) / span : 0.0;
    out.push_back(radial_point(r, center, theta[seg] + w * (theta[seg + 1] - theta[seg])));
  }
  return out;
}

std::vector<Index> start_at_angle_zero(std::vector<Index> loop, const std::vector<Vec2>& nodes,
                                       const Vec2& center) {
  std::size_t best = 0;
  double best_angle = 10.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const double a = polar_angle(nodes[loop[i]], center);
    if (a < best_angle) {
      best_angle = a;
      best = i;
    }
  }
  std::rotate(loop.begin(), loop.begin() + static_cast<std::ptrdiff_t>(best), loop.end());
  return loop;
}

std::vector<Triangle> zipper(const std::vector<Index>& inner, const std::vector<Index>& outer,
                             const std::vector<Vec2>& nodes) {
  const std::size_t ni = inner.size();
  const std::size_t no = outer.size();
  std::vector<Triangle> tris;
  tris.reserve(ni + no);
  std::size_t a = 0, b = 0;
  while (a < ni || b < no) {
    const Index ia = inner[a % ni];
    const Index ob = outer[b % no];
    const Index ia1 = inner[(a + 1) % ni];
    const Index ob1 = outer[(b + 1) % no];
    bool advance_outer;
    if (a == ni) {
      advance_outer = true;
    } else if (b == no) {
      advance_outer = false;
    } else {
      advance_outer = (nodes[ia] - nodes[ob1]).squaredNorm() < (nodes[ia1] - nodes[ob]).squaredNorm();
    }
    if (advance_outer) {
      tris.push_back({ia, ob, ob1});
      ++b;
    } else {
      tris.push_back({ia, ob, ia1});
      ++a;
    }
  }
  return tris;
}

double triangle_min_angle_deg(const Vec2& a, const Vec2& b, const Vec2& c) {
  const std::array<Vec2, 3> p{a, b, c};
  double worst = 180.0;
  for (int k = 0; k < 3; ++k) {
    const Vec2 u = p[(k + 1) % 3] - p[k];
    const Vec2 v = p[(k + 2) % 3] - p[k];
    worst = std::min(worst, std::atan2(std::abs(cross(u, v)), u.dot(v)) * 180.0 / kPi);
  }
  return worst;
}

namespace {

double quality(const std::vector<Vec2>& nodes, const std::vector<Triangle>& tris) {
  double worst = 180.0;
  for (const auto& t : tris) {
    if (cross(nodes[t[1]] - nodes[t[0]], nodes[t[2]] - nodes[t[0]]) <= 0.0) return -1.0;
    worst = std::min(worst, triangle_min_angle_deg(nodes[t[0]], nodes[t[1]], nodes[t[2]]));
  }
  return worst;
}

}  // namespace

void smooth(std::vector<Vec2>& nodes, const std::vector<Triangle>& tris, const std::vector<Index>& movable,
            int sweeps) {
  std::vector<std::set<Index>> nbr(nodes.size());
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) {
      nbr[t[k]].insert(t[(k + 1) % 3]);
      nbr[t[k]].insert(t[(k + 2) % 3]);
    }
  }
  double q = quality(nodes, tris);
  for (int s = 0; s < sweeps; ++s) {
    std::vector<Vec2> trial = nodes;
    for (Index v : movable) {
      if (nbr[v].empty()) continue;
      Vec2 avg = Vec2::Zero();
      for (Index w : nbr[v]) avg += nodes[w];
      trial[v] = avg / static_cast<double>(nbr[v].size());
    }
    const double qt = quality(trial, tris);
    if (qt <= q) break;
    nodes = std::move(trial);
    q = qt;
  }
}

namespace {

double angle_at(const Vec2& apex, const Vec2& a, const Vec2& b) {
  const Vec2 u = a - apex;
  const Vec2 v = b - apex;
  return std::atan2(std::abs(cross(u, v)), u.dot(v));
}

bool positive(const std::vector<Vec2>& nodes, const Triangle& t) {
  return cross(nodes[t[1]] - nodes[t[0]], nodes[t[2]] - nodes[t[0]]) > 0.0;
}

// one pass of Delaunay flips; returns the number of flips done
int flip_pass(const std::vector<Vec2>& nodes, std::vector<Triangle>& tris, const std::vector<char>& locked,
              std::size_t first) {
  int flips = 0;
  std::map<std::pair<Index, Index>, std::vector<std::size_t>> edges;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const Index a = tris[t][k], b = tris[t][(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  }
  std::vector<char> touched(tris.size(), 0);
  for (const auto& [key, ts] : edges) {
    if (ts.size() != 2 || ts[0] < first || ts[1] < first || touched[ts[0]] || touched[ts[1]]) continue;
    const auto [a, b] = key;
    if (locked[a] && locked[b]) continue;
    auto opposite = [&](const Triangle& t) {
      for (Index v : t) {
        if (v != a && v != b) return v;
      }
      return Index{-1};
    };
    const Index c = opposite(tris[ts[0]]);
    const Index d = opposite(tris[ts[1]]);
    if (locked[c] && locked[d]) continue;
    if (angle_at(nodes[c], nodes[a], nodes[b]) + angle_at(nodes[d], nodes[a], nodes[b]) <= kPi + 1e-12) continue;
    Triangle t1{c, d, a}, t2{d, c, b};
    if (!positive(nodes, t1)) std::swap(t1[0], t1[1]);
    if (!positive(nodes, t2)) std::swap(t2[0], t2[1]);
    // the quad must be convex: both new triangles non-degenerate and the
    // diagonal a-b crossing c-d
    const double s1 = cross(nodes[d] - nodes[c], nodes[a] - nodes[c]);
    const double s2 = cross(nodes[d] - nodes[c], nodes[b] - nodes[c]);
    if (s1 * s2 >= 0.0 || !positive(nodes, t1) || !positive(nodes, t2)) continue;
    tris[ts[0]] = t1;
    tris[ts[1]] = t2;
    touched[ts[0]] = touched[ts[1]] = 1;
    ++flips;
  }
  return flips;
}

}  // namespace

void improve_triangulation(std::vector<Vec2>& nodes, std::vector<Triangle>& tris, const std::vector<Index>& movable,
                           const std::vector<char>& locked, int rounds, std::size_t first_flippable) {
  for (int r = 0; r < rounds; ++r) {
    int flips = 0;
    for (int pass = 0; pass < 20; ++pass) {
      const int f = flip_pass(nodes, tris, locked, first_flippable);
      flips += f;
      if (f == 0) break;
    }
    std::vector<std::vector<std::size_t>> star(nodes.size());
    std::vector<std::set<Index>> nbr(nodes.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int k = 0; k < 3; ++k) {
        star[tris[t][k]].push_back(t);
        nbr[tris[t][k]].insert(tris[t][(k + 1) % 3]);
        nbr[tris[t][k]].insert(tris[t][(k + 2) % 3]);
      }
    }
    auto local_quality = [&](Index v) {
      double worst = 180.0;
      for (std::size_t t : star[v]) {
        const auto& tri = tris[t];
        if (!positive(nodes, tri)) return -1.0;
        worst = std::min(worst, triangle_min_angle_deg(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]));
      }
      return worst;
    };
    bool moved = false;
    for (Index v : movable) {
      if (nbr[v].empty()) continue;
      Vec2 avg = Vec2::Zero();
      for (Index w : nbr[v]) avg += nodes[w];
      avg /= static_cast<double>(nbr[v].size());
      const Vec2 old = nodes[v];
      const double q0 = local_quality(v);
      for (double step : {1.0, 0.5, 0.25}) {
        nodes[v] = old + step * (avg - old);
        if (local_quality(v) > q0 + 1e-9) {
          moved = true;
          break;
        }
        nodes[v] = old;
      }
    }
    if (flips == 0 && !moved) break;
  }
}

std::vector<Triangle> angular_zipper(const std::vector<Index>& inner, const std::vector<Index>& outer,
                                     const std::vector<Vec2>& nodes, const Vec2& center) {
  auto unwrap = [&](const std::vector<Index>& ring) {
    std::vector<double> ang;
    for (Index v : ring) {
      double a = polar_angle(nodes[v], center);
      if (!ang.empty()) {
        while (a < ang.back()) a += 2.0 * kPi;
      }
      ang.push_back(a);
    }
    return ang;
  };
  const auto ai = unwrap(inner);
  const auto ao = unwrap(outer);
  const std::size_t ni = inner.size();
  const std::size_t no = outer.size();
  auto next_angle = [](const std::vector<double>& ang, std::size_t k) {
    return k + 1 < ang.size() ? ang[k + 1] : ang.front() + 2.0 * kPi;
  };
  std::vector<Triangle> tris;
  tris.reserve(ni + no);
  std::size_t a = 0, b = 0;
  while (a < ni || b < no) {
    const Index ia = inner[a % ni];
    const Index ob = outer[b % no];
    bool advance_outer;
    if (a == ni) {
      advance_outer = true;
    } else if (b == no) {
      advance_outer = false;
    } else {
      advance_outer = next_angle(ao, b) < next_angle(ai, a);
    }
    if (advance_outer) {
      tris.push_back({ia, ob, outer[(b + 1) % no]});
      ++b;
    } else {
      tris.push_back({ia, ob, inner[(a + 1) % ni]});
      ++a;
    }
  }
  return tris;
}

}  // namespace helmopt::detail
