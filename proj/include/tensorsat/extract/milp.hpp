#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tensorsat {

enum class VarType { Continuous, Integer, Binary };
enum class Sense { LessEqual, GreaterEqual, Equal };

struct Variable {
  std::string name;
  VarType type = VarType::Continuous;
  double lower = 0;  // must be finite
  double upper = std::numeric_limits<double>::infinity();
  double objective = 0;
};

struct Term {
  std::uint32_t var;
  double coef;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::GreaterEqual;
  double rhs = 0;
};

/// minimize sum objective_j * x_j subject to the constraints and bounds.
struct LinearProgram {
  std::vector<Variable> vars;
  std::vector<Constraint> constraints;

  std::uint32_t add_var(Variable v);
  void add_constraint(Constraint c);
  double evaluate(const std::vector<double>& x) const;
  /// Max violation over constraints, bounds, and integrality.
  double violation(const std::vector<double>& x) const;
};

// -- LP relaxation ---------------------------------------------------------

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0;
  std::size_t pivots = 0;
};

/// Dense two-phase primal simplex on the continuous relaxation (integrality
/// ignored, bounds honored).
LpResult solve_lp(const LinearProgram& lp);

// -- branch and bound --------------------------------------------------------

struct MilpOptions {
  double time_limit_seconds = 60;
  /// Known feasible point used as the initial incumbent.
  std::optional<std::vector<double>> incumbent;
  /// Drop the upper bound of binaries from LP relaxations and clamp values
  /// above 1 afterwards. Valid for models where lowering any binary from a
  /// value above 1 to 1 preserves feasibility and does not raise the
  /// objective (covering-style models such as extraction).
  bool implicit_binary_upper = false;
  double integrality_tol = 1e-6;
  double gap_tol = 1e-9;
  /// Fractional variables tried on both sides before branching; 0 or 1
  /// branches on the most fractional one directly.
  std::size_t strong_branching_candidates = 8;
};

struct MilpResult {
  enum class Status { Optimal, TimeLimit, Infeasible };
  Status status = Status::Infeasible;
  bool has_solution = false;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::infinity();
  std::size_t nodes = 0;
  std::size_t lp_solves = 0;
  double seconds = 0;
};

/// Best-first branch and bound with LP bounds and strong branching over the
/// most fractional binaries (integers once no binary is fractional).
MilpResult solve_milp(const LinearProgram& lp, const MilpOptions& options = {});

}  // namespace tensorsat
