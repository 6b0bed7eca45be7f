#include <cogband/linear_program.hpp>

#include <cogband/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cogband::lp {

namespace {

// Tableau in canonical form for the current basis. Column `rhs_col()` holds
// the basic solution; `cost` holds reduced costs c_j - c_B B^-1 A_j.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), cells_(rows * (cols + 1), 0.0), basis_(rows, 0),
          cost_(cols + 1, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return cells_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return cells_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    double rhs(std::size_t r) const { return at(r, cols_); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::vector<std::size_t>& basis() { return basis_; }
    const std::vector<std::size_t>& basis() const { return basis_; }

    /// Recompute reduced costs for objective `c` (length cols) under the
    /// current basis. cost_[cols] holds minus the objective value.
    void price(const std::vector<double>& c)
    {
        for (std::size_t j = 0; j <= cols_; ++j)
            cost_[j] = j < cols_ ? c[j] : 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            const double cb = c[basis_[r]];
            if (cb == 0.0)
                continue;
            for (std::size_t j = 0; j <= cols_; ++j)
                cost_[j] -= cb * at(r, j);
        }
    }

    double reduced_cost(std::size_t j) const { return cost_[j]; }
    double objective_value() const { return -cost_[cols_]; }

    void pivot(std::size_t pr, std::size_t pc)
    {
        const double inv = 1.0 / at(pr, pc);
        for (std::size_t j = 0; j <= cols_; ++j)
            at(pr, j) *= inv;
        at(pr, pc) = 1.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (r == pr)
                continue;
            const double f = at(r, pc);
            if (f == 0.0)
                continue;
            for (std::size_t j = 0; j <= cols_; ++j)
                at(r, j) -= f * at(pr, j);
            at(r, pc) = 0.0;
        }
        const double f = cost_[pc];
        if (f != 0.0) {
            for (std::size_t j = 0; j <= cols_; ++j)
                cost_[j] -= f * at(pr, j);
            cost_[pc] = 0.0;
        }
        basis_[pr] = pc;
    }

    void drop_row(std::size_t r)
    {
        cells_.erase(cells_.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)),
                     cells_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (cols_ + 1)));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
        --rows_;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> cells_;
    std::vector<std::size_t> basis_;
    std::vector<double> cost_;
};

enum class PhaseOutcome { Optimal, Unbounded, IterationLimit };

// Primal simplex iterations under Bland's rule. Columns with
// `eligible[j] == false` never enter.
PhaseOutcome run_phase(Tableau& t, const std::vector<bool>& eligible, const Options& opt,
                       std::size_t& iterations)
{
    while (true) {
        if (iterations >= opt.max_iterations)
            return PhaseOutcome::IterationLimit;

        std::size_t entering = t.cols();
        for (std::size_t j = 0; j < t.cols(); ++j) {
            if (eligible[j] && t.reduced_cost(j) > opt.optimality_tol) {
                entering = j;
                break;
            }
        }
        if (entering == t.cols())
            return PhaseOutcome::Optimal;

        std::size_t leaving = t.rows();
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const double a = t.at(r, entering);
            if (a <= opt.pivot_tol)
                continue;
            const double ratio = std::max(t.rhs(r), 0.0) / a;
            const double tie_eps = 1e-12 * std::max(1.0, std::abs(best_ratio));
            if (leaving == t.rows() || ratio < best_ratio - tie_eps) {
                best_ratio = ratio;
                leaving = r;
            } else if (ratio <= best_ratio + tie_eps && t.basis()[r] < t.basis()[leaving]) {
                best_ratio = std::min(ratio, best_ratio);
                leaving = r;
            }
        }
        if (leaving == t.rows())
            return PhaseOutcome::Unbounded;

        t.pivot(leaving, entering);
        ++iterations;
    }
}

} // namespace

Result solve(const Problem& problem, const Options& opt)
{
    const std::size_t n = problem.num_variables();
    const std::size_t m = problem.constraints.size();
    for (const auto& c : problem.constraints)
        if (c.coefficients.size() != n)
            throw DimensionError("constraint length differs from objective length");

    // Normalize to nonnegative right-hand sides.
    std::vector<Constraint> rows = problem.constraints;
    for (auto& c : rows) {
        if (c.rhs < 0.0) {
            for (double& a : c.coefficients)
                a = -a;
            c.rhs = -c.rhs;
            if (c.relation == Relation::LessEqual)
                c.relation = Relation::GreaterEqual;
            else if (c.relation == Relation::GreaterEqual)
                c.relation = Relation::LessEqual;
        }
    }

    std::size_t num_slack = 0;
    std::size_t num_artificial = 0;
    for (const auto& c : rows) {
        if (c.relation != Relation::Equal)
            ++num_slack;
        if (c.relation != Relation::LessEqual)
            ++num_artificial;
    }
    const std::size_t first_artificial = n + num_slack;
    const std::size_t total_cols = first_artificial + num_artificial;

    Tableau t(m, total_cols);
    std::size_t next_slack = n;
    std::size_t next_artificial = first_artificial;
    for (std::size_t r = 0; r < m; ++r) {
        const auto& c = rows[r];
        for (std::size_t j = 0; j < n; ++j)
            t.at(r, j) = c.coefficients[j];
        t.rhs(r) = c.rhs;
        switch (c.relation) {
        case Relation::LessEqual:
            t.at(r, next_slack) = 1.0;
            t.basis()[r] = next_slack++;
            break;
        case Relation::GreaterEqual:
            t.at(r, next_slack++) = -1.0;
            t.at(r, next_artificial) = 1.0;
            t.basis()[r] = next_artificial++;
            break;
        case Relation::Equal:
            t.at(r, next_artificial) = 1.0;
            t.basis()[r] = next_artificial++;
            break;
        }
    }

    Result result;
    result.x.assign(n, 0.0);

    // Phase 1: maximize -(sum of artificials).
    if (num_artificial > 0) {
        std::vector<double> phase1_cost(total_cols, 0.0);
        for (std::size_t j = first_artificial; j < total_cols; ++j)
            phase1_cost[j] = -1.0;
        t.price(phase1_cost);
        const std::vector<bool> all(total_cols, true);
        const auto outcome = run_phase(t, all, opt, result.iterations);
        if (outcome == PhaseOutcome::IterationLimit) {
            result.status = Status::IterationLimit;
            return result;
        }
        if (-t.objective_value() > opt.feasibility_tol) {
            result.status = Status::Infeasible;
            return result;
        }
        // Drive zero-valued artificials out of the basis; rows that cannot
        // pivot are linearly dependent and are dropped.
        for (std::size_t r = 0; r < t.rows();) {
            if (t.basis()[r] < first_artificial) {
                ++r;
                continue;
            }
            std::size_t col = first_artificial;
            double best = opt.feasibility_tol;
            for (std::size_t j = 0; j < first_artificial; ++j) {
                if (std::abs(t.at(r, j)) > best) {
                    best = std::abs(t.at(r, j));
                    col = j;
                }
            }
            if (col == first_artificial) {
                t.drop_row(r);
                continue;
            }
            t.pivot(r, col);
            ++r;
        }
    }

    // Phase 2 over the original and slack columns only.
    std::vector<double> cost(total_cols, 0.0);
    std::copy(problem.objective.begin(), problem.objective.end(), cost.begin());
    t.price(cost);
    std::vector<bool> eligible(total_cols, false);
    std::fill(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(first_artificial), true);
    const auto outcome = run_phase(t, eligible, opt, result.iterations);
    if (outcome == PhaseOutcome::Unbounded) {
        result.status = Status::Unbounded;
        return result;
    }
    if (outcome == PhaseOutcome::IterationLimit) {
        result.status = Status::IterationLimit;
        return result;
    }

    for (std::size_t r = 0; r < t.rows(); ++r)
        if (t.basis()[r] < n)
            result.x[t.basis()[r]] = std::max(t.rhs(r), 0.0);
    result.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        result.objective += problem.objective[j] * result.x[j];
    result.status = Status::Optimal;
    return result;
}

} // namespace cogband::lp
