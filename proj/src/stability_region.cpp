#include <cogband/stability_region.hpp>

#include <cogband/errors.hpp>
#include <cogband/linear_program.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <thread>

namespace cogband {

namespace {

void check_query(const SuccessMatrix& p, const RegionQuery& query)
{
    p.validate();
    if (query.rates.size() != p.num_sus())
        throw DimensionError("query needs one rate per SU");
    if (query.target_su >= p.num_sus())
        throw DimensionError("target SU index out of range");
    for (std::size_t l = 0; l < query.rates.size(); ++l)
        if (l != query.target_su && !(query.rates[l] >= 0.0))
            throw InvalidArgumentError("query rate for SU " + std::to_string(l) + " must be nonnegative");
}

EnvelopePoint infeasible_point(const SuccessMatrix& p, const RegionQuery& query)
{
    EnvelopePoint out;
    out.rates = query.rates;
    out.rates[query.target_su] = 0.0;
    out.omega_star.omega = Matrix(p.num_bands(), p.num_sus());
    out.feasible = false;
    return out;
}

void require_solved(const lp::Result& r)
{
    if (r.status == lp::Status::IterationLimit)
        throw NumericalError("simplex iteration limit reached");
    if (r.status == lp::Status::Unbounded)
        throw NumericalError("region program reported unbounded");
}

void enumerate_injective(std::size_t domain, std::size_t codomain, std::vector<std::size_t>& current,
                         std::vector<bool>& used, std::vector<std::vector<std::size_t>>& out)
{
    if (current.size() == domain) {
        out.push_back(current);
        return;
    }
    for (std::size_t v = 0; v < codomain; ++v) {
        if (used[v])
            continue;
        used[v] = true;
        current.push_back(v);
        enumerate_injective(domain, codomain, current, used, out);
        current.pop_back();
        used[v] = false;
    }
}

} // namespace

double AssignmentMatrix::constraint_violation() const
{
    const std::size_t mp = omega.rows();
    const std::size_t ms = omega.cols();
    double worst = 0.0;
    for (double v : omega.data())
        worst = std::max({worst, -v, v - 1.0});
    for (std::size_t j = 0; j < mp; ++j) {
        const double s = omega.row_sum(j);
        worst = std::max(worst, s - 1.0);
        if (ms >= mp)
            worst = std::max(worst, 1.0 - s);
    }
    for (std::size_t k = 0; k < ms; ++k) {
        const double s = omega.col_sum(k);
        worst = std::max(worst, s - 1.0);
        if (mp >= ms)
            worst = std::max(worst, 1.0 - s);
    }
    return worst;
}

void AssignmentMatrix::validate(double tol) const
{
    const double v = constraint_violation();
    if (v > tol)
        throw ConstraintViolationError("assignment matrix violates its constraints by " + std::to_string(v));
}

std::vector<double> AssignmentMatrix::service_rates(const SuccessMatrix& p) const
{
    if (p.num_bands() != omega.rows() || p.num_sus() != omega.cols())
        throw DimensionError("assignment and success matrices differ in shape");
    std::vector<double> mu(omega.cols(), 0.0);
    for (std::size_t j = 0; j < omega.rows(); ++j)
        for (std::size_t k = 0; k < omega.cols(); ++k)
            mu[k] += omega(j, k) * p(j, k);
    return mu;
}

EnvelopePoint max_rate_lp(const SuccessMatrix& p, const RegionQuery& query)
{
    check_query(p, query);
    const std::size_t mp = p.num_bands();
    const std::size_t ms = p.num_sus();
    const auto var = [ms](std::size_t j, std::size_t k) { return j * ms + k; };

    lp::Problem prob;
    prob.objective.assign(mp * ms, 0.0);
    for (std::size_t j = 0; j < mp; ++j)
        prob.objective[var(j, query.target_su)] = p(j, query.target_su);

    // Each band holds at most one SU; every band is used when SUs outnumber bands.
    for (std::size_t j = 0; j < mp; ++j) {
        lp::Constraint c{std::vector<double>(mp * ms, 0.0),
                         ms >= mp ? lp::Relation::Equal : lp::Relation::LessEqual, 1.0};
        for (std::size_t k = 0; k < ms; ++k)
            c.coefficients[var(j, k)] = 1.0;
        prob.constraints.push_back(std::move(c));
    }
    // Each SU sits on at most one band; every SU is placed when bands suffice.
    for (std::size_t k = 0; k < ms; ++k) {
        lp::Constraint c{std::vector<double>(mp * ms, 0.0),
                         mp >= ms ? lp::Relation::Equal : lp::Relation::LessEqual, 1.0};
        for (std::size_t j = 0; j < mp; ++j)
            c.coefficients[var(j, k)] = 1.0;
        prob.constraints.push_back(std::move(c));
    }
    for (std::size_t l = 0; l < ms; ++l) {
        if (l == query.target_su)
            continue;
        lp::Constraint c{std::vector<double>(mp * ms, 0.0), lp::Relation::GreaterEqual, query.rates[l]};
        for (std::size_t j = 0; j < mp; ++j)
            c.coefficients[var(j, l)] = p(j, l);
        prob.constraints.push_back(std::move(c));
    }

    const auto result = lp::solve(prob);
    require_solved(result);
    if (result.status == lp::Status::Infeasible)
        return infeasible_point(p, query);

    EnvelopePoint out;
    out.omega_star.omega = Matrix(mp, ms);
    for (std::size_t j = 0; j < mp; ++j)
        for (std::size_t k = 0; k < ms; ++k)
            out.omega_star.omega(j, k) = std::clamp(result.x[var(j, k)], 0.0, 1.0);
    out.rates = query.rates;
    out.rates[query.target_su] = result.objective;
    out.feasible = true;
    return out;
}

std::vector<std::vector<std::size_t>> enumerate_assignments(std::size_t num_bands, std::size_t num_sus,
                                                            std::uint64_t limit)
{
    const auto counts = assignment_count(num_bands, num_sus);
    if (counts.system_s > limit)
        throw EnumerationLimitError("assignment count " + std::to_string(counts.system_s)
                                    + " exceeds the enumeration limit; use the reduced program over Omega");

    std::vector<std::vector<std::size_t>> out;
    out.reserve(static_cast<std::size_t>(counts.system_s));
    std::vector<std::size_t> current;
    if (num_bands >= num_sus) {
        std::vector<bool> used(num_bands, false);
        enumerate_injective(num_sus, num_bands, current, used, out);
        return out;
    }

    // More SUs than bands: choose the SU holding each real band; the rest
    // sit on virtual bands.
    std::vector<std::vector<std::size_t>> holders;
    std::vector<bool> used(num_sus, false);
    enumerate_injective(num_bands, num_sus, current, used, holders);
    for (const auto& h : holders) {
        std::vector<std::size_t> a(num_sus, kVirtualBand);
        for (std::size_t j = 0; j < num_bands; ++j)
            a[h[j]] = j;
        out.push_back(std::move(a));
    }
    return out;
}

EnvelopePoint max_rate_lp_over_q(const SuccessMatrix& p, const RegionQuery& query, std::uint64_t limit)
{
    check_query(p, query);
    const std::size_t mp = p.num_bands();
    const std::size_t ms = p.num_sus();
    const auto assignments = enumerate_assignments(mp, ms, limit);
    const std::size_t n = assignments.size();

    const auto rate = [&](const std::vector<std::size_t>& a, std::size_t k) {
        return a[k] == kVirtualBand ? 0.0 : p(a[k], k);
    };

    lp::Problem prob;
    prob.objective.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        prob.objective[i] = rate(assignments[i], query.target_su);
    prob.constraints.push_back({std::vector<double>(n, 1.0), lp::Relation::Equal, 1.0});
    for (std::size_t l = 0; l < ms; ++l) {
        if (l == query.target_su)
            continue;
        lp::Constraint c{std::vector<double>(n, 0.0), lp::Relation::GreaterEqual, query.rates[l]};
        for (std::size_t i = 0; i < n; ++i)
            c.coefficients[i] = rate(assignments[i], l);
        prob.constraints.push_back(std::move(c));
    }

    const auto result = lp::solve(prob);
    require_solved(result);
    if (result.status == lp::Status::Infeasible)
        return infeasible_point(p, query);

    EnvelopePoint out;
    out.omega_star.omega = Matrix(mp, ms);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < ms; ++k)
            if (assignments[i][k] != kVirtualBand)
                out.omega_star.omega(assignments[i][k], k) += result.x[i];
    out.rates = query.rates;
    out.rates[query.target_su] = result.objective;
    out.feasible = true;
    return out;
}

TwoByTwoSolution closed_form_2x2(const SuccessMatrix& p, double lambda_s1)
{
    if (p.num_bands() != 2 || p.num_sus() != 2)
        throw DimensionError("closed form applies to two bands and two SUs only");
    const double p11 = p(0, 0);
    const double p21 = p(1, 0);
    const double p12 = p(0, 1);
    const double p22 = p(1, 1);

    // SU 1 is served at eps*P21 + (1-eps)*P11 >= lambda_s1; SU 2 receives
    // eps*P12 + (1-eps)*P22, so the objective slope in eps is P12 - P22.
    const double slope = p12 - p22;
    const double shift = p21 - p11;
    const double excess = lambda_s1 - p11;

    TwoByTwoSolution out;
    const auto finish = [&](double eps) {
        out.epsilon = eps;
        out.lambda_s2_max = eps * p12 + (1.0 - eps) * p22;
        out.feasible = true;
        return out;
    };

    if ((shift < 0.0 && lambda_s1 > p11) || (shift > 0.0 && lambda_s1 > p21) || (shift == 0.0 && excess > 0.0))
        return out;

    // Feasible epsilons form [lo, hi].
    double lo = 0.0;
    double hi = 1.0;
    if (shift > 0.0)
        lo = std::max(excess / shift, 0.0);
    else if (shift < 0.0)
        hi = std::min(excess / shift, 1.0);

    if (slope > 0.0)
        return finish(hi);
    return finish(lo); // slope < 0, and the flat case takes the smallest feasible
}

std::vector<EnvelopePoint> envelope_on_grid(const SuccessMatrix& p, std::size_t target_su, std::size_t sweep_su,
                                            std::span<const double> rates, std::span<const double> sweep_values)
{
    if (target_su == sweep_su)
        throw InvalidArgumentError("target and sweep SU must differ");
    if (rates.size() != p.num_sus() || sweep_su >= p.num_sus())
        throw DimensionError("sweep needs one rate per SU");
    std::vector<EnvelopePoint> out(sweep_values.size());
    const RegionQuery base{target_su, std::vector<double>(rates.begin(), rates.end())};
    const auto solve_range = [&](std::size_t begin, std::size_t end) {
        RegionQuery q = base;
        for (std::size_t i = begin; i < end; ++i) {
            q.rates[sweep_su] = sweep_values[i];
            out[i] = max_rate_lp(p, q);
        }
    };

    // Points are independent; split them into contiguous chunks.
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(out.size() / 8, 1));
    const std::size_t chunk = (out.size() + workers - 1) / std::max<std::size_t>(workers, 1);
    std::vector<std::future<void>> jobs;
    for (std::size_t begin = chunk; begin < out.size(); begin += chunk)
        jobs.push_back(std::async(std::launch::async, solve_range, begin, std::min(begin + chunk, out.size())));
    solve_range(0, std::min(chunk, out.size()));
    for (auto& j : jobs)
        j.get();
    return out;
}

std::vector<EnvelopePoint> envelope_sweep(const SuccessMatrix& p, std::size_t target_su, std::size_t sweep_su,
                                          std::span<const double> rates, std::size_t grid_size)
{
    if (grid_size < 2)
        throw InvalidArgumentError("grid size must be at least 2");
    if (rates.size() != p.num_sus() || sweep_su >= p.num_sus() || target_su >= p.num_sus())
        throw DimensionError("sweep needs one rate per SU");

    RegionQuery axis{sweep_su, std::vector<double>(rates.begin(), rates.end())};
    axis.rates[target_su] = 0.0;
    const auto intercept = max_rate_lp(p, axis);
    const double sweep_max = intercept.feasible ? intercept.rates[sweep_su] : 0.0;

    std::vector<double> values(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i)
        values[i] = sweep_max * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    values.back() = sweep_max;
    return envelope_on_grid(p, target_su, sweep_su, rates, values);
}

} // namespace cogband
