#pragma once

#include "helmopt/spectral.hpp"

#include <string>
#include <utility>
#include <vector>

namespace helmopt::oracle {

// Bessel zeros j_{m,k} (J_m) and j'_{m,k} (J_m'), standard tables.
inline constexpr double kJ01 = 2.404825557695773;
inline constexpr double kJ11 = 3.831705970207512;
inline constexpr double kJ21 = 5.135622301840683;
inline constexpr double kJ02 = 5.520078110286311;
inline constexpr double kJ31 = 6.380161895923984;
inline constexpr double kJ12 = 7.015586669815619;
inline constexpr double kJp11 = 1.841183781340659;
inline constexpr double kJp21 = 3.054236928227140;
inline constexpr double kJp01 = 3.831705970207512;
inline constexpr double kJp31 = 4.201188941210528;
inline constexpr double kJp41 = 5.317553126083995;
inline constexpr double kJp12 = 5.331442773525033;

enum class Domain { UnitSquare, UnitDisk };

struct AnalyticEigen {
  double lambda = 0.0;
  ScalarFn eigenfunction;  // L²-normalized on the domain
  std::string label;
};

/// Lowest `count` eigenpairs of −Δ on the unit square [0,1]² or the unit disk
/// centred at the origin, repeated according to multiplicity. Supported
/// conditions: Dirichlet and Neumann.
std::vector<AnalyticEigen> analytic_eigs(Domain domain, BcVariant bc, int count);

struct ConvergenceFit {
  std::vector<std::pair<double, double>> samples;  // (parameter, value)
  double fitted_rate = 0.0;
  double r_squared = 0.0;
};

/// Least-squares slope of log(value) against log(parameter). Needs at least
/// three samples with strictly decreasing positive parameters and positive values.
ConvergenceFit fit_rate(const std::vector<std::pair<double, double>>& samples);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y ≈ intercept + slope·x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// u = sin(πx) sin(πy) on the unit square with f = (2π² − k²) u.
struct Manufactured {
  double k2 = 1.0;
  double u(const Vec2& x) const;
  Vec2 grad(const Vec2& x) const;
  double f(const Vec2& x) const;
};

/// One-sided branch derivatives (λ_i(t) − λ_i(0)) / t of the eigenvalues
/// first_index .. first_index + count − 1, Richardson-combined over t and t/2,
/// sorted ascending.
std::vector<double> fd_branch_derivatives(const Mesh& mesh, BcVariant variant, int first_index, int count,
                                          const VelocityField& velocity, double t);

}  // namespace helmopt::oracle
