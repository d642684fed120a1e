#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace helmopt {

using Index = std::int32_t;
using Vec2 = Eigen::Vector2d;
using Vector = Eigen::VectorXd;

using ScalarFn = std::function<double(const Vec2&)>;
using VectorFn = std::function<Vec2(const Vec2&)>;

inline constexpr double kPi = 3.14159265358979323846;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Base of every error raised by the toolkit. `kind()` is a stable short
/// identifier ("invalid-argument", "resonance", ...) used by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define HELMOPT_DEFINE_ERROR(Name, tag)                                     \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(tag, what) {}            \
  };

HELMOPT_DEFINE_ERROR(InvalidArgument, "invalid-argument")
HELMOPT_DEFINE_ERROR(GeometryError, "geometry")
HELMOPT_DEFINE_ERROR(ResolutionError, "resolution")
HELMOPT_DEFINE_ERROR(DeformationError, "deformation")
HELMOPT_DEFINE_ERROR(ParseError, "parse")
HELMOPT_DEFINE_ERROR(LookupError, "lookup")
HELMOPT_DEFINE_ERROR(AssemblyError, "assembly")
HELMOPT_DEFINE_ERROR(BcError, "bc")
HELMOPT_DEFINE_ERROR(SolverError, "solver")
HELMOPT_DEFINE_ERROR(MultiplicityError, "multiplicity")
HELMOPT_DEFINE_ERROR(PreconditionError, "precondition")
HELMOPT_DEFINE_ERROR(EvaluationError, "evaluation")
HELMOPT_DEFINE_ERROR(QualityError, "quality")
HELMOPT_DEFINE_ERROR(ConfigError, "config")
HELMOPT_DEFINE_ERROR(FitError, "fit")
HELMOPT_DEFINE_ERROR(StallError, "stall")

#undef HELMOPT_DEFINE_ERROR

/// Raised when k² sits on (or numerically next to) the discrete spectrum.
class ResonanceError : public Error {
 public:
  ResonanceError(const std::string& what, double nearest_eigenvalue)
      : Error("resonance", what), nearest_(nearest_eigenvalue) {}
  double nearest_eigenvalue() const { return nearest_; }

 private:
  double nearest_;
};

}  // namespace helmopt
