#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

namespace sbrrm::conic {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { le, eq };

struct LinearRow {
  std::vector<int> cols;
  std::vector<double> coeffs;
  RowSense sense = RowSense::le;
  double rhs = 0.0;
  std::string label;
};

/// ||x_members||_2 <= x_head over program variables.
struct SecondOrderCone {
  int head = -1;
  std::vector<int> members;
  std::string label;
};

/// Language-neutral SOCP in maximization form. Cones reference variables
/// directly; affine cone slots are expressed through auxiliary variables bound
/// by equality rows (the builder takes care of that). The leading
/// num_decision_variables indices are the externally meaningful unknowns, the
/// rest is builder plumbing.
struct ConicProgram {
  int num_variables = 0;
  int num_decision_variables = 0;
  std::vector<double> objective;  // maximize objective . x
  std::vector<double> lower;      // box bounds, +-inf allowed
  std::vector<double> upper;
  std::vector<LinearRow> rows;
  std::vector<SecondOrderCone> cones;
  std::vector<std::string> variable_names;

  /// Throws std::invalid_argument on out-of-range indices, a cone head that
  /// is one of its own members, NaN/inf coefficients, or duplicate labels.
  void validate() const;

  std::string to_json() const;
};

/// Worst violations of a candidate point against the program, by family.
/// Rows: a.x - rhs for <=, |a.x - rhs| for =; bounds likewise; cones:
/// ||members|| - head.
struct Residuals {
  double row = 0.0;
  double bound = 0.0;
  double cone = 0.0;
  double max() const { return std::max(row, std::max(bound, cone)); }
};

Residuals compute_residuals(const ConicProgram& program, const Eigen::VectorXd& x);

/// Sparse affine expression used by the builder.
struct LinExpr {
  std::vector<int> cols;
  std::vector<double> coeffs;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT: implicit by design
  void add(int var, double coeff) {
    if (coeff == 0.0) return;
    cols.push_back(var);
    coeffs.push_back(coeff);
  }
  LinExpr& operator+=(const LinExpr& other);
  bool is_plain_variable() const {
    return constant == 0.0 && cols.size() == 1 && coeffs[0] == 1.0;
  }
};

/// Incremental program construction with label bookkeeping. Cone slots that
/// are not plain variables get an auxiliary variable plus a binding equality
/// row; plain variables are used directly.
class ProgramBuilder {
 public:
  int add_variable(const std::string& label, double lb = -kInf, double ub = kInf);
  void set_objective(int var, double coeff);
  void add_objective(int var, double coeff);
  void set_bounds(int var, double lb, double ub);
  void add_row(LinExpr expr, RowSense sense, double rhs, const std::string& label);
  /// ||members|| <= head.
  void add_cone(const LinExpr& head, const std::vector<LinExpr>& members,
                const std::string& label);
  int num_variables() const { return static_cast<int>(program_.objective.size()); }
  /// Marks the end of the decision block; auxiliary variables created later.
  void seal_decision_variables();

  /// Validates and returns the program.
  ConicProgram build();

 private:
  int require_variable(const LinExpr& expr, const std::string& label);

  ConicProgram program_;
  int aux_counter_ = 0;
  bool sealed_ = false;
};

enum class SolveStatus { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

const char* to_string(SolveStatus status);

struct SolverOptions {
  double feasibility_tol = 1e-7;
  double gap_tol = 1e-7;
  int max_iterations = 100;
  int verbosity = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd x;           // full program indexing, decision block first
  double objective = 0.0;      // maximization value
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;    // relative
  int iterations = 0;
  double wall_time_s = 0.0;
};

}  // namespace sbrrm::conic
