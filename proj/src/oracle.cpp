#include "helmopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace helmopt::oracle {

namespace {

struct Mode {
  double lambda;
  int order;    // angular order m
  bool sine;    // sin(mθ) partner
  double zero;  // Bessel zero, 0 for the constant mode
};

}  // namespace

std::vector<AnalyticEigen> analytic_eigs(Domain domain, BcVariant bc, int count) {
  if (count < 1) throw InvalidArgument("analytic_eigs: count must be positive");
  if (bc != BcVariant::Dirichlet && bc != BcVariant::Neumann) {
    throw InvalidArgument("analytic_eigs supports Dirichlet and Neumann conditions only");
  }
  std::vector<AnalyticEigen> out;
  if (domain == Domain::UnitSquare) {
    const int lo = bc == BcVariant::Dirichlet ? 1 : 0;
    std::vector<std::tuple<double, int, int>> modes;
    for (int m = lo; m <= lo + count + 2; ++m) {
      for (int n = lo; n <= lo + count + 2; ++n) modes.emplace_back(kPi * kPi * (m * m + n * n), m, n);
    }
    std::sort(modes.begin(), modes.end());
    for (int i = 0; i < count; ++i) {
      const auto [lambda, m, n] = modes[static_cast<std::size_t>(i)];
      AnalyticEigen e;
      e.lambda = lambda;
      e.label = "(" + std::to_string(m) + "," + std::to_string(n) + ")";
      if (bc == BcVariant::Dirichlet) {
        e.eigenfunction = [m = m, n = n](const Vec2& x) {
          return 2.0 * std::sin(m * kPi * x.x()) * std::sin(n * kPi * x.y());
        };
      } else {
        const double c = (m == 0 ? 1.0 : std::sqrt(2.0)) * (n == 0 ? 1.0 : std::sqrt(2.0));
        e.eigenfunction = [m = m, n = n, c](const Vec2& x) {
          return c * std::cos(m * kPi * x.x()) * std::cos(n * kPi * x.y());
        };
      }
      out.push_back(std::move(e));
    }
    return out;
  }

  // unit disk: J_m(j r) cos(mθ) and sin(mθ) partners
  std::vector<Mode> modes;
  if (bc == BcVariant::Dirichlet) {
    const std::vector<std::tuple<double, int>> zeros{{kJ01, 0}, {kJ11, 1}, {kJ21, 2}, {kJ02, 0}, {kJ31, 3}, {kJ12, 1}};
    for (const auto& [z, m] : zeros) {
      modes.push_back({z * z, m, false, z});
      if (m > 0) modes.push_back({z * z, m, true, z});
    }
  } else {
    modes.push_back({0.0, 0, false, 0.0});
    const std::vector<std::tuple<double, int>> zeros{{kJp11, 1}, {kJp21, 2}, {kJp01, 0},
                                                     {kJp31, 3}, {kJp41, 4}, {kJp12, 1}};
    for (const auto& [z, m] : zeros) {
      modes.push_back({z * z, m, false, z});
      if (m > 0) modes.push_back({z * z, m, true, z});
    }
  }
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.lambda < b.lambda; });
  if (count > static_cast<int>(modes.size())) throw InvalidArgument("analytic_eigs: too many disk modes requested");
  for (int i = 0; i < count; ++i) {
    const Mode md = modes[static_cast<std::size_t>(i)];
    AnalyticEigen e;
    e.lambda = md.lambda;
    e.label = "m=" + std::to_string(md.order) + (md.sine ? " sin" : " cos");
    if (md.zero == 0.0) {
      e.eigenfunction = [](const Vec2&) { return 1.0 / std::sqrt(kPi); };
    } else {
      const int m = md.order;
      const double z = md.zero;
      double radial;  // ∫_0^1 J_m(z r)² r dr
      if (bc == BcVariant::Dirichlet) {
        const double jm1 = std::cyl_bessel_j(m + 1.0, z);
        radial = 0.5 * jm1 * jm1;
      } else {
        const double jm = std::cyl_bessel_j(static_cast<double>(m), z);
        radial = 0.5 * (1.0 - static_cast<double>(m * m) / (z * z)) * jm * jm;
      }
      const double angular = m == 0 ? 2.0 * kPi : kPi;
      const double scale = 1.0 / std::sqrt(angular * radial);
      const bool sine = md.sine;
      e.eigenfunction = [m, z, scale, sine](const Vec2& x) {
        const double r = x.norm();
        const double th = std::atan2(x.y(), x.x());
        const double ang = m == 0 ? 1.0 : (sine ? std::sin(m * th) : std::cos(m * th));
        return scale * std::cyl_bessel_j(static_cast<double>(m), z * r) * ang;
      };
    }
    out.push_back(std::move(e));
  }
  return out;
}

ConvergenceFit fit_rate(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw FitError("fit_rate needs at least three samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].first > 0.0) || !(samples[i].second > 0.0)) {
      throw FitError("fit_rate needs positive parameters and values");
    }
    if (i > 0 && !(samples[i].first < samples[i - 1].first)) {
      throw FitError("fit_rate parameters must be strictly decreasing");
    }
  }
  std::vector<double> x, y;
  for (const auto& [p, v] : samples) {
    x.push_back(std::log(p));
    y.push_back(std::log(v));
  }
  const LinearFit lf = linear_fit(x, y);
  ConvergenceFit out;
  out.samples = samples;
  out.fitted_rate = lf.slope;
  out.r_squared = lf.r_squared;
  return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw FitError("linear_fit needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw FitError("linear_fit needs distinct abscissae");
  LinearFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (out.intercept + out.slope * x[i]);
    sse += r * r;
  }
  // a constant sample is fitted exactly
  out.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  return out;
}

double Manufactured::u(const Vec2& x) const { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); }

Vec2 Manufactured::grad(const Vec2& x) const {
  return {kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()), kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y())};
}

double Manufactured::f(const Vec2& x) const { return (2.0 * kPi * kPi - k2) * u(x); }

std::vector<double> fd_branch_derivatives(const Mesh& mesh, BcVariant variant, int first_index, int count,
                                          const VelocityField& velocity, double t) {
  const int need = first_index + count + 1;
  const auto base = solve_eigs(mesh, variant, need);
  auto slopes = [&](double step) {
    const auto moved = solve_eigs(deform(mesh, velocity, step), variant, need);
    std::vector<double> out;
    for (int i = first_index; i < first_index + count; ++i) out.push_back((moved[i].lambda - base[i].lambda) / step);
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto coarse = slopes(t);
  const auto fine = slopes(0.5 * t);
  std::vector<double> out;
  for (std::size_t i = 0; i < coarse.size(); ++i) out.push_back(2.0 * fine[i] - coarse[i]);
  return out;
}

}  // namespace helmopt::oracle
