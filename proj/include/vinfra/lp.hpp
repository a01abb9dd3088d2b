#pragma once

#include "vinfra/errors.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vinfra {

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpVariable {
    std::string name;
    double lower = 0.0;
    std::optional<double> upper;
    bool integral = false;
    double objective = 0.0; // minimize
};

struct LpConstraint {
    std::string name;
    std::vector<std::pair<std::size_t, double>> terms; // (variable index, coefficient)
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

class LinearProgram {
  public:
    std::size_t add_variable(std::string name, double lower = 0.0,
                             std::optional<double> upper = std::nullopt, bool integral = false);
    std::size_t add_constraint(std::string name,
                               std::vector<std::pair<std::size_t, double>> terms, Relation rel,
                               double rhs);
    void add_objective(std::size_t var, double coeff);

    const std::vector<LpVariable>& variables() const { return vars_; }
    const std::vector<LpConstraint>& constraints() const { return rows_; }
    std::optional<std::size_t> variable_index(const std::string& name) const;
    bool has_integral_variables() const;

  private:
    std::vector<LpVariable> vars_;
    std::vector<LpConstraint> rows_;
    std::map<std::string, std::size_t> index_;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> values; // one per structural variable
    double objective = 0.0;
    std::size_t pivots = 0;
};

struct SolveOptions {
    std::size_t pivot_limit = 1000000;
    std::size_t dantzig_pivots = 10000; // then switch to Bland's rule
    double feasibility_tol = 1e-6;
    double reduced_cost_tol = 1e-9;
};

// Primal simplex (revised, dense basis inverse). Integrality flags are only
// legal together with relax_integrality; exact MILP solving is out of scope
// and handled upstream by relaxation and rounding.
LpSolution solve(const LinearProgram& lp, bool relax_integrality,
                 const SolveOptions& opts = {});

// Fixed-format MPS text; long names are mangled deterministically and the
// map is emitted as comment lines.
std::string emit_mps(const LinearProgram& lp, const std::string& name = "VINFRA");

} // namespace vinfra
