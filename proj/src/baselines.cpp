#include <cogband/baselines.hpp>

#include <cogband/errors.hpp>
#include <cogband/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cogband {

namespace {

void check_shapes(const SuccessMatrix& p, const SelectionPolicy& policy)
{
    if (policy.gamma.rows() != p.num_bands() || policy.gamma.cols() != p.num_sus())
        throw DimensionError("selection policy and success matrix differ in shape");
    policy.validate();
}

// Euclidean projection of one column onto {x >= 0, sum x <= 1}.
void project_column(Matrix& g, std::size_t k)
{
    const std::size_t mp = g.rows();
    double sum = 0.0;
    for (std::size_t j = 0; j < mp; ++j) {
        g(j, k) = std::max(g(j, k), 0.0);
        sum += g(j, k);
    }
    if (sum <= 1.0)
        return;
    std::vector<double> v(mp);
    for (std::size_t j = 0; j < mp; ++j)
        v[j] = g(j, k);
    std::sort(v.begin(), v.end(), std::greater<>());
    double acc = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < mp; ++i) {
        acc += v[i];
        const double t = (acc - 1.0) / static_cast<double>(i + 1);
        if (v[i] - t > 0.0)
            theta = t;
    }
    for (std::size_t j = 0; j < mp; ++j)
        g(j, k) = std::max(g(j, k) - theta, 0.0);
}

struct Candidate {
    Matrix gamma;
    double violation = 0.0;
    double objective = 0.0;
};

constexpr double kViolationTol = 1e-12;

class LocalSearch {
public:
    LocalSearch(const SuccessMatrix& p, const RegionQuery& q, const ShatOptions& opt)
        : p_(p), q_(q), opt_(opt) {}

    void score(Candidate& c) const
    {
        const auto mu = shat_service_rates_saturated(p_, SelectionPolicy{c.gamma});
        c.violation = 0.0;
        for (std::size_t l = 0; l < mu.size(); ++l)
            if (l != q_.target_su)
                c.violation += std::max(0.0, q_.rates[l] - mu[l]);
        c.objective = mu[q_.target_su];
    }

    static bool better(const Candidate& a, const Candidate& b)
    {
        const bool fa = a.violation <= kViolationTol;
        const bool fb = b.violation <= kViolationTol;
        if (fa != fb)
            return fa;
        if (!fa)
            return a.violation < b.violation - 1e-15;
        return a.objective > b.objective + 1e-15;
    }

    Candidate run(Matrix start, Rng& rng) const
    {
        const std::size_t mp = p_.num_bands();
        const std::size_t ms = p_.num_sus();
        Candidate best{std::move(start)};
        score(best);
        double step = 0.25;
        for (std::size_t it = 0; it < opt_.iterations && step > 1e-10; ++it) {
            bool improved = false;
            // Single-column transfers between bands and the idle slot (index mp).
            for (std::size_t k = 0; k < ms && !improved; ++k) {
                for (std::size_t from = 0; from <= mp && !improved; ++from) {
                    const double avail = from == mp ? 1.0 - best.gamma.col_sum(k) : best.gamma(from, k);
                    if (avail <= 0.0)
                        continue;
                    const double amount = std::min(step, avail);
                    for (std::size_t to = 0; to <= mp; ++to) {
                        if (to == from)
                            continue;
                        Candidate trial{best.gamma};
                        if (from < mp)
                            trial.gamma(from, k) = std::max(0.0, trial.gamma(from, k) - amount);
                        if (to < mp)
                            trial.gamma(to, k) += amount;
                        project_column(trial.gamma, k);
                        score(trial);
                        if (better(trial, best)) {
                            best = std::move(trial);
                            improved = true;
                            break;
                        }
                    }
                }
            }
            // Joint perturbations slide along active rate constraints.
            for (std::size_t d = 0; d < opt_.random_directions && !improved; ++d) {
                Candidate trial{best.gamma};
                for (std::size_t k = 0; k < ms; ++k) {
                    for (std::size_t j = 0; j < mp; ++j)
                        trial.gamma(j, k) += step * (2.0 * uniform01(rng) - 1.0);
                    project_column(trial.gamma, k);
                }
                score(trial);
                if (better(trial, best)) {
                    best = std::move(trial);
                    improved = true;
                }
            }
            if (!improved)
                step *= 0.5;
        }
        return best;
    }

private:
    const SuccessMatrix& p_;
    const RegionQuery& q_;
    const ShatOptions& opt_;
};

Matrix random_policy(std::size_t mp, std::size_t ms, Rng& rng)
{
    Matrix g(mp, ms);
    for (std::size_t k = 0; k < ms; ++k) {
        // Uniform on the simplex over the bands plus the idle slot.
        std::vector<double> w(mp + 1);
        for (double& x : w)
            x = exponential(rng, 1.0);
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t j = 0; j < mp; ++j)
            g(j, k) = w[j] / total;
    }
    return g;
}

} // namespace

void SelectionPolicy::validate(double tol) const
{
    for (double v : gamma.data())
        if (v < -tol || v > 1.0 + tol)
            throw ConstraintViolationError("selection probability outside [0, 1]");
    for (std::size_t k = 0; k < gamma.cols(); ++k)
        if (gamma.col_sum(k) > 1.0 + tol)
            throw ConstraintViolationError("SU " + std::to_string(k) + " selection probabilities exceed one");
}

void FixedAssignment::validate(std::size_t num_bands) const
{
    std::vector<bool> used(num_bands, false);
    for (std::size_t band : band_of_su) {
        if (band >= num_bands)
            throw InvalidArgumentError("fixed assignment names a band out of range");
        if (used[band])
            throw InvalidArgumentError("fixed assignment is not injective");
        used[band] = true;
    }
}

std::vector<double> shat_service_rates_saturated(const SuccessMatrix& p, const SelectionPolicy& policy)
{
    const std::vector<double> nobody_empty(p.num_sus(), 0.0);
    return shat_service_rate_conditional(p, policy, nobody_empty);
}

std::vector<double> shat_service_rate_conditional(const SuccessMatrix& p, const SelectionPolicy& policy,
                                                  std::span<const double> empty_probs)
{
    check_shapes(p, policy);
    const std::size_t mp = p.num_bands();
    const std::size_t ms = p.num_sus();
    if (empty_probs.size() != ms)
        throw DimensionError("need one empty-queue probability per SU");
    for (double e : empty_probs)
        if (!(e >= 0.0 && e <= 1.0))
            throw InvalidArgumentError("empty-queue probability outside [0, 1]");

    const Matrix& g = policy.gamma;
    std::vector<double> mu(ms, 0.0);
    for (std::size_t k = 0; k < ms; ++k) {
        for (std::size_t j = 0; j < mp; ++j) {
            double clear = 1.0;
            for (std::size_t v = 0; v < ms; ++v)
                if (v != k)
                    clear *= 1.0 - g(j, v) * (1.0 - empty_probs[v]);
            mu[k] += p(j, k) * g(j, k) * clear;
        }
    }
    return mu;
}

std::vector<double> fixed_assignment_rates(const SuccessMatrix& p, const FixedAssignment& assignment)
{
    if (assignment.band_of_su.size() != p.num_sus())
        throw DimensionError("fixed assignment needs one band per SU");
    assignment.validate(p.num_bands());
    std::vector<double> mu(p.num_sus());
    for (std::size_t k = 0; k < mu.size(); ++k)
        mu[k] = p(assignment.band_of_su[k], k);
    return mu;
}

FixedOptimum best_fixed_envelope(const SuccessMatrix& p, const RegionQuery& query, std::uint64_t limit)
{
    p.validate();
    if (p.num_bands() < p.num_sus())
        throw InvalidArgumentError("fixed assignment needs at least as many bands as SUs");
    if (query.rates.size() != p.num_sus() || query.target_su >= p.num_sus())
        throw DimensionError("query needs one rate per SU");

    FixedOptimum best;
    for (const auto& a : enumerate_assignments(p.num_bands(), p.num_sus(), limit)) {
        bool ok = true;
        for (std::size_t l = 0; l < a.size() && ok; ++l)
            if (l != query.target_su && query.rates[l] > p(a[l], l))
                ok = false;
        if (!ok)
            continue;
        const double value = p(a[query.target_su], query.target_su);
        if (!best.feasible || value > best.lambda_max) {
            best.feasible = true;
            best.lambda_max = value;
            best.assignment.band_of_su = a;
        }
    }
    return best;
}

ShatOptimum shat_optimize(const SuccessMatrix& p, const RegionQuery& query, const ShatOptions& options)
{
    p.validate();
    if (query.rates.size() != p.num_sus() || query.target_su >= p.num_sus())
        throw DimensionError("query needs one rate per SU");
    if (options.restarts < 1)
        throw InvalidArgumentError("need at least one restart");

    const std::size_t mp = p.num_bands();
    const std::size_t ms = p.num_sus();

    std::vector<Matrix> starts;
    if (mp >= ms) {
        const auto fixed = best_fixed_envelope(p, query);
        if (fixed.feasible) {
            Matrix g(mp, ms);
            for (std::size_t k = 0; k < ms; ++k)
                g(fixed.assignment.band_of_su[k], k) = 1.0;
            starts.push_back(std::move(g));
        }
    }
    const auto s_opt = max_rate_lp(p, query);
    if (s_opt.feasible)
        starts.push_back(s_opt.omega_star.omega);

    Rng seeder(options.seed);
    for (std::size_t r = 0; r < options.restarts; ++r)
        starts.push_back(random_policy(mp, ms, seeder));

    LocalSearch search(p, query, options);
    std::optional<Candidate> best;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        Rng rng(options.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
        auto found = search.run(starts[i], rng);
        if (!best || LocalSearch::better(found, *best))
            best = std::move(found);
    }

    ShatOptimum out;
    out.gamma_star.gamma = best->gamma;
    out.rates = shat_service_rates_saturated(p, out.gamma_star);
    out.feasible = best->violation <= kViolationTol;
    out.lambda_max = out.feasible ? best->objective : 0.0;
    return out;
}

} // namespace cogband
