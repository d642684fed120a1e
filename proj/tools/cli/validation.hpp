#pragma once

#include "config.hpp"

#include <string>
#include <vector>

namespace helmopt::cli {

struct ValidationRow {
  std::string name;
  std::string formula;
  std::string reference_kind;  // fd, discrete-identity, analytic
  double value = 0.0;
  double reference = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool asserted = true;
  bool pass = true;
};

/// Adjoint formulas against finite differences and exact discrete identities
/// on the disk benchmark (k² = 1, f = 1, A = 0, η₀ = 0) and, for the
/// multiple eigenvalue, the unit square. Rows with asserted = false are
/// reported only.
std::vector<ValidationRow> run_validation(const Json& config);

Json to_json(const ValidationRow& row);

}  // namespace helmopt::cli
