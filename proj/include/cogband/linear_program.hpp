#pragma once

// Dense two-phase primal simplex for the small region programs. Solves
//
//     maximize  c'x   subject to  A_i x (<=, =, >=) b_i,  x >= 0
//
// with Bland's smallest-index rule for both entering and leaving variables,
// so it terminates on degenerate problems.

#include <cstddef>
#include <vector>

namespace cogband::lp {

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Constraint {
    std::vector<double> coefficients;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

struct Problem {
    std::vector<double> objective; ///< maximized
    std::vector<Constraint> constraints;

    std::size_t num_variables() const noexcept { return objective.size(); }
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Result {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::size_t iterations = 0;
};

struct Options {
    double feasibility_tol = 1e-9;  ///< phase-1 residual accepted as feasible
    double optimality_tol = 1e-10;  ///< reduced cost below this is not improving
    double pivot_tol = 1e-12;       ///< smallest usable pivot magnitude
    std::size_t max_iterations = 200000;
};

/// Throws DimensionError when a constraint row does not match the objective
/// length.
Result solve(const Problem& problem, const Options& options = {});

} // namespace cogband::lp
