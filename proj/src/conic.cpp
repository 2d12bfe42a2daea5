#include "sbrrm/conic.hpp"

#include <cmath>
#include <json.hpp>
#include <stdexcept>
#include <unordered_set>

namespace sbrrm::conic {

using nlohmann::json;

void ConicProgram::validate() const {
  const int n = num_variables;
  if (static_cast<int>(objective.size()) != n || static_cast<int>(lower.size()) != n ||
      static_cast<int>(upper.size()) != n || static_cast<int>(variable_names.size()) != n) {
    throw std::invalid_argument("conic: dimension mismatch in program arrays");
  }
  if (num_decision_variables < 0 || num_decision_variables > n) {
    throw std::invalid_argument("conic: bad decision variable count");
  }
  auto check_finite = [](double v, const std::string& where) {
    if (std::isnan(v) || std::isinf(v))
      throw std::invalid_argument("conic: non-finite coefficient in " + where);
  };
  for (int i = 0; i < n; ++i) {
    check_finite(objective[i], "objective");
    if (std::isnan(lower[i]) || std::isnan(upper[i]))
      throw std::invalid_argument("conic: NaN bound");
    if (lower[i] > upper[i])
      throw std::invalid_argument("conic: empty bound interval on " + variable_names[i]);
  }
  std::unordered_set<std::string> labels;
  for (int i = 0; i < n; ++i) {
    if (!labels.insert(variable_names[i]).second)
      throw std::invalid_argument("conic: label collision on " + variable_names[i]);
  }
  for (const LinearRow& row : rows) {
    if (row.cols.size() != row.coeffs.size())
      throw std::invalid_argument("conic: dimension mismatch in row " + row.label);
    for (std::size_t k = 0; k < row.cols.size(); ++k) {
      if (row.cols[k] < 0 || row.cols[k] >= n)
        throw std::invalid_argument("conic: index out of range in row " + row.label);
      check_finite(row.coeffs[k], "row " + row.label);
    }
    check_finite(row.rhs, "row rhs " + row.label);
  }
  for (const SecondOrderCone& cone : cones) {
    if (cone.head < 0 || cone.head >= n)
      throw std::invalid_argument("conic: cone head out of range in " + cone.label);
    for (int m : cone.members) {
      if (m < 0 || m >= n)
        throw std::invalid_argument("conic: cone member out of range in " + cone.label);
      if (m == cone.head)
        throw std::invalid_argument("conic: cone head repeated among members in " +
                                    cone.label);
    }
  }
}

Residuals compute_residuals(const ConicProgram& program, const Eigen::VectorXd& x) {
  Residuals res;
  for (const LinearRow& row : program.rows) {
    double v = -row.rhs;
    for (std::size_t k = 0; k < row.cols.size(); ++k) v += row.coeffs[k] * x(row.cols[k]);
    const double viol = row.sense == RowSense::eq ? std::abs(v) : std::max(0.0, v);
    res.row = std::max(res.row, viol);
  }
  for (int i = 0; i < program.num_variables; ++i) {
    if (program.lower[i] > -kInf)
      res.bound = std::max(res.bound, program.lower[i] - x(i));
    if (program.upper[i] < kInf) res.bound = std::max(res.bound, x(i) - program.upper[i]);
  }
  res.bound = std::max(res.bound, 0.0);
  for (const SecondOrderCone& cone : program.cones) {
    double norm2 = 0.0;
    for (int m : cone.members) norm2 += x(m) * x(m);
    res.cone = std::max(res.cone, std::sqrt(norm2) - x(cone.head));
  }
  res.cone = std::max(res.cone, 0.0);
  return res;
}

std::string ConicProgram::to_json() const {
  json j;
  j["num_variables"] = num_variables;
  j["num_decision_variables"] = num_decision_variables;
  j["objective"] = objective;
  j["lower"] = json::array();
  j["upper"] = json::array();
  for (int i = 0; i < num_variables; ++i) {
    j["lower"].push_back(std::isinf(lower[i]) ? json() : json(lower[i]));
    j["upper"].push_back(std::isinf(upper[i]) ? json() : json(upper[i]));
  }
  j["variable_names"] = variable_names;
  json rows_json = json::array();
  for (const LinearRow& row : rows) {
    rows_json.push_back({{"cols", row.cols},
                         {"coeffs", row.coeffs},
                         {"sense", row.sense == RowSense::eq ? "eq" : "le"},
                         {"rhs", row.rhs},
                         {"label", row.label}});
  }
  j["rows"] = std::move(rows_json);
  json cones_json = json::array();
  for (const SecondOrderCone& cone : cones) {
    cones_json.push_back(
        {{"head", cone.head}, {"members", cone.members}, {"label", cone.label}});
  }
  j["cones"] = std::move(cones_json);
  return j.dump();
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  constant += other.constant;
  cols.insert(cols.end(), other.cols.begin(), other.cols.end());
  coeffs.insert(coeffs.end(), other.coeffs.begin(), other.coeffs.end());
  return *this;
}

int ProgramBuilder::add_variable(const std::string& label, double lb, double ub) {
  const int idx = num_variables();
  program_.objective.push_back(0.0);
  program_.lower.push_back(lb);
  program_.upper.push_back(ub);
  program_.variable_names.push_back(label);
  if (!sealed_) program_.num_decision_variables = idx + 1;
  return idx;
}

void ProgramBuilder::set_objective(int var, double coeff) { program_.objective[var] = coeff; }

void ProgramBuilder::add_objective(int var, double coeff) { program_.objective[var] += coeff; }

void ProgramBuilder::set_bounds(int var, double lb, double ub) {
  program_.lower[var] = lb;
  program_.upper[var] = ub;
}

void ProgramBuilder::add_row(LinExpr expr, RowSense sense, double rhs, const std::string& label) {
  LinearRow row;
  row.cols = std::move(expr.cols);
  row.coeffs = std::move(expr.coeffs);
  row.sense = sense;
  row.rhs = rhs - expr.constant;
  row.label = label;
  program_.rows.push_back(std::move(row));
}

int ProgramBuilder::require_variable(const LinExpr& expr, const std::string& label) {
  if (expr.is_plain_variable()) return expr.cols[0];
  const int aux = add_variable(label + "#aux" + std::to_string(aux_counter_++));
  LinExpr binding = expr;
  binding.add(aux, -1.0);
  add_row(std::move(binding), RowSense::eq, 0.0, label + "#bind");
  return aux;
}

void ProgramBuilder::add_cone(const LinExpr& head, const std::vector<LinExpr>& members,
                              const std::string& label) {
  SecondOrderCone cone;
  cone.label = label;
  cone.head = require_variable(head, label);
  cone.members.reserve(members.size());
  for (const LinExpr& m : members) cone.members.push_back(require_variable(m, label));
  program_.cones.push_back(std::move(cone));
}

void ProgramBuilder::seal_decision_variables() {
  sealed_ = true;
  program_.num_decision_variables = num_variables();
}

ConicProgram ProgramBuilder::build() {
  program_.num_variables = num_variables();
  if (!sealed_) program_.num_decision_variables = program_.num_variables;
  program_.validate();
  return program_;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration-limit";
    case SolveStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

}  // namespace sbrrm::conic
