#pragma once

#include "helmopt/topo.hpp"

#include <optional>
#include <string>
#include <vector>

namespace helmopt {

struct AreaConstraint {
  bool enabled = false;
  double target = 0.0;  // <= 0: area of the initial mesh
  double rate = 1.0;    // pull towards the target per unit pseudo-time
};

struct TopoPhase {
  bool enabled = false;
  int every = 5;
  double quantile = 0.05;
  double eps0 = 0.0;
};

struct OptimizeConfig {
  int max_iters = 30;
  /// Largest boundary displacement tried first; the descent field is scaled
  /// to unit maximum norm, so the step is a length.
  double step0 = 0.05;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double min_step = 1e-6;
  AreaConstraint area;
  std::vector<BoundaryTag> movable_tags{BoundaryTag::Obstacle};
  BcVariant variant = BcVariant::Obstacle;
  TopoPhase topo;
  double stop_tol = 0.0;
  double min_angle_deg = 15.0;
  double extension_stiffening = 1.0;
  bool relax_interior = true;  // smooth interior nodes of every trial mesh
  std::string output_dir;  // empty: no files written
  SolverOptions solver;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  std::string kind;  // initial, descent, topology
  double j = 0.0;
  double j_gradient_misfit = 0.0;
  double j_value_misfit = 0.0;
  double dj = 0.0;  // |DJ| along the normalized descent field
  double step = 0.0;
  bool accepted = false;
  int backtracks = 0;
  double mu = 0.0;
  double area = 0.0;
  double min_angle = 0.0;
  int holes_nucleated = 0;
  std::optional<Vec2> hole_center;
  double hole_radius = 0.0;
  double predicted_change = 0.0;
  bool rolled_back = false;
};

struct StepResult {
  Mesh mesh;
  IterationRecord record;
  Vector state;
};

/// Hadamard density on the movable boundary of the current mesh: from the
/// Dirichlet or obstacle formula, or for Neumann from one bump field per
/// boundary node.
Vector descent_density(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg);

struct DescentDirection {
  double mu = 0.0;              // multiplier subtracted from g (0 without the area constraint)
  Vector normal_speed;          // −(g − μ) on movable nodes, 0 elsewhere
  double max_speed = 0.0;
};

DescentDirection descent_direction(const Mesh& mesh, const Vector& g, const OptimizeConfig& cfg);

/// One steepest-descent step V = −(g − μ)n with Armijo backtracking.
/// `j_old` avoids a re-solve when the caller already knows J on `mesh`.
/// Throws StallError when no admissible step above cfg.min_step exists.
StepResult descent_step(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg, double step,
                        std::optional<double> j_old = std::nullopt);

/// Nucleates at most one hole at the most negative admissible site of the
/// topological derivative (the source field unless `field` is given).
StepResult topology_step(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg,
                         const TopoField* field = nullptr);

struct OptimizeResult {
  std::vector<IterationRecord> history;
  Mesh mesh;
  bool stalled = false;
  std::string stop_reason;
};

OptimizeResult run(const Mesh& mesh, const ProblemData& data, const OptimizeConfig& cfg);

/// RFC-4180 CSV of the iteration records.
void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path);

/// Exact check of the Armijo invariant on consecutive accepted descent records.
bool history_monotone(const std::vector<IterationRecord>& history, double armijo_c);

}  // namespace helmopt
