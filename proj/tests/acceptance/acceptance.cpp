// Acceptance checks. One line per criterion; exit status is the number of
// failures.

#include "support.hpp"

#include <cogband/baselines.hpp>
#include <cogband/birkhoff.hpp>
#include <cogband/core_model.hpp>
#include <cogband/simulator.hpp>
#include <cogband/stability_region.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace cogband;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

int g_failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_s > 0.0 && secs > budget_s) {
        o.pass = false;
        o.detail += "; over time budget " + fmt(budget_s) + " s";
    }
    std::printf("[%s] %d %s: %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    g_failures += o.pass ? 0 : 1;
}

NetworkModel two_band_model(std::vector<double> su_arrival)
{
    return testing::abstract_model({0.25, 0.875}, Matrix{{0.7, 0.85}, {0.8, 0.9}}, {0.8, 0.8}, std::move(su_arrival));
}

bool conserved(const SimulationTrace& t)
{
    for (std::size_t q = 0; q < t.num_queues(); ++q)
        if (t.final_lengths[q] != static_cast<std::int64_t>(t.arrivals[q]) - static_cast<std::int64_t>(t.departures[q]))
            return false;
    return true;
}

Outcome two_band_envelope()
{
    const auto p = testing::two_band_success();
    const auto pts = envelope_sweep(p, 1, 0, std::vector<double>{0.0, 0.0}, 101);
    double worst = 0.0;
    for (const auto& pt : pts) {
        const auto cf = closed_form_2x2(p, pt.rates[0]);
        if (!pt.feasible || !cf.feasible)
            return {false, "infeasible grid point at lambda1=" + fmt(pt.rates[0])};
        worst = std::max(worst, std::abs(cf.lambda_s2_max - pt.rates[1]));
    }
    const double e0 = std::max(std::abs(pts.front().rates[0]), std::abs(pts.front().rates[1] - 0.7875));
    const double e1 = std::max(std::abs(pts.back().rates[0] - 0.7), std::abs(pts.back().rates[1] - 0.2125));
    const bool ok = pts.size() == 101 && worst <= 1e-8 && e0 <= 1e-8 && e1 <= 1e-8;
    return {ok, "max |LP - closed form| = " + fmt(worst) + ", intercepts (" + fmt(pts.front().rates[0]) + ", "
                    + fmt(pts.front().rates[1]) + ") and (" + fmt(pts.back().rates[0]) + ", "
                    + fmt(pts.back().rates[1]) + ")"};
}

Outcome lp_equivalence()
{
    Rng rng(20240601);
    double worst = 0.0;
    int feasible = 0;
    int mismatched = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t mp = 2 + static_cast<std::size_t>(uniform01(rng) * 3);
        const std::size_t ms = 2 + static_cast<std::size_t>(uniform01(rng) * 3);
        const auto p = testing::random_success(mp, ms, rng);
        RegionQuery q{static_cast<std::size_t>(uniform01(rng) * static_cast<double>(ms)), std::vector<double>(ms)};
        for (double& r : q.rates)
            r = 0.3 * uniform01(rng);
        const auto a = max_rate_lp(p, q);
        const auto b = max_rate_lp_over_q(p, q);
        if (a.feasible != b.feasible) {
            ++mismatched;
            continue;
        }
        if (a.feasible) {
            ++feasible;
            worst = std::max(worst, std::abs(a.rates[q.target_su] - b.rates[q.target_su]));
        }
    }
    return {mismatched == 0 && worst <= 1e-9 && feasible > 0,
            std::to_string(feasible) + " feasible of 200, max difference " + fmt(worst) + ", feasibility mismatches "
                + std::to_string(mismatched)};
}

Outcome birkhoff_round_trip()
{
    Rng rng(8080);
    double worst_rec = 0.0;
    double worst_marg = 0.0;
    int too_many = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 7);
        const std::size_t mix = 1 + static_cast<std::size_t>(uniform01(rng) * 2 * static_cast<double>(n));
        const Matrix omega = testing::random_doubly_stochastic(n, mix, rng);
        const auto ds = pad_to_doubly_stochastic(AssignmentMatrix{omega});
        const auto s = decompose(ds);
        s.validate();
        worst_rec = std::max(worst_rec, max_abs_diff(reconstruct(s).values, ds.values));
        worst_marg = std::max(worst_marg, max_abs_diff(s.marginals(), omega));
        const std::size_t m = ds.size();
        too_many += s.terms.size() > m * m - 2 * m + 2 ? 1 : 0;
    }
    return {worst_rec <= 1e-9 && worst_marg <= 1e-9 && too_many == 0,
            "max reconstruction error " + fmt(worst_rec) + ", max marginal error " + fmt(worst_marg)
                + ", term-bound violations " + std::to_string(too_many)};
}

Outcome simulation_vs_region(std::vector<SimulationTrace>& keep)
{
    const auto p = testing::two_band_success();
    const auto pt = max_rate_lp(p, RegionQuery{1, {0.5, 0.0}});
    if (!pt.feasible)
        return {false, "envelope point infeasible"};
    const double l2 = pt.rates[1];
    const auto schedule = decompose(pad_to_doubly_stochastic(pt.omega_star));
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    SimulationOptions opt;
    opt.horizon = 500'000;
    opt.stride = 10;

    const auto under = run_seeds(two_band_model({0.9 * 0.5, 0.9 * l2}), ScheduledAccess{schedule}, opt, seeds);
    const auto over = run_seeds(two_band_model({1.1 * 0.5, 1.1 * l2}), ScheduledAccess{schedule}, opt, seeds);
    int under_stable = 0;
    int over_unstable = 0;
    for (const auto& t : under) {
        const auto v = stability_verdict(t);
        under_stable += v.per_queue[2] == Stability::Stable && v.per_queue[3] == Stability::Stable;
    }
    for (const auto& t : over) {
        const auto v = stability_verdict(t);
        over_unstable += v.per_queue[2] == Stability::Unstable || v.per_queue[3] == Stability::Unstable;
    }
    keep.insert(keep.end(), under.begin(), under.end());
    keep.insert(keep.end(), over.begin(), over.end());
    return {std::abs(l2 - 0.431547619047619) <= 1e-9 && under_stable == 5 && over_unstable == 5,
            "lambda2* = " + fmt(l2) + "; 90%: all SUs stable in " + std::to_string(under_stable)
                + "/5 seeds; 110%: some SU unstable in " + std::to_string(over_unstable) + "/5 seeds"};
}

Outcome availability_law(std::vector<SimulationTrace>& keep)
{
    const auto pi = testing::four_band_availability();
    const auto model = testing::abstract_model(pi, testing::four_band_pout_bar(), {0.9, 0.9, 0.9, 0.9},
                                               {0.05, 0.05, 0.05, 0.05});
    SimulationOptions opt;
    opt.horizon = 1'000'000;
    opt.seed = 5;
    opt.stride = 100;
    const auto t = run_slots(model, FixedAccess{{{0, 1, 2, 3}}}, opt);
    double worst = 0.0;
    std::string est;
    for (std::size_t j = 0; j < pi.size(); ++j) {
        const double hat = empirical_availability(t, j);
        worst = std::max(worst, std::abs(hat - pi[j]));
        est += (j ? ", " : "") + fmt(hat);
    }
    keep.push_back(t);
    return {worst <= 0.01, "pi_hat = (" + est + "), max deviation " + fmt(worst)};
}

Outcome proposition_ordering()
{
    const auto p = testing::two_band_success();
    int violations = 0;
    int infeasible = 0;
    for (int i = 0; i < 50; ++i) {
        const double l1 = 0.7 * i / 49.0;
        const RegionQuery q{1, {l1, 0.0}};
        const auto s = max_rate_lp(p, q);
        const auto shat = shat_optimize(p, q);
        const auto fixed = best_fixed_envelope(p, q);
        if (!s.feasible || !shat.feasible || !fixed.feasible) {
            ++infeasible;
            continue;
        }
        if (fixed.lambda_max > shat.lambda_max + 1e-9 || shat.lambda_max > s.rates[1] + 1e-9)
            ++violations;
    }
    const RegionQuery q{1, {0.4, 0.0}};
    const double gap = max_rate_lp(p, q).rates[1] - shat_optimize(p, q).lambda_max;
    return {violations == 0 && infeasible == 0 && gap > 1e-6,
            std::to_string(violations) + " ordering violations over 50 queries, S - Shat gap at lambda1=0.4 is "
                + fmt(gap)};
}

Outcome slice_shrinkage()
{
    const auto p = testing::four_band_success();
    const std::vector<double> low{0.0, 0.0, 0.1, 0.1};
    const std::vector<double> high{0.0, 0.0, 0.35, 0.35};
    const auto base = envelope_sweep(p, 1, 0, low, 101);
    std::vector<double> grid;
    for (const auto& pt : base)
        grid.push_back(pt.rates[0]);
    const auto shrunk = envelope_on_grid(p, 1, 0, high, grid);
    int violations = 0;
    int compared = 0;
    double max_drop = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!shrunk[i].feasible)
            continue;
        if (!base[i].feasible) {
            ++violations;
            continue;
        }
        ++compared;
        if (shrunk[i].rates[1] > base[i].rates[1] + 1e-9)
            ++violations;
        max_drop = std::max(max_drop, base[i].rates[1] - shrunk[i].rates[1]);
    }
    return {violations == 0 && compared > 0,
            std::to_string(compared) + " common grid points, " + std::to_string(violations)
                + " violations, largest shrinkage " + fmt(max_drop)};
}

Outcome outage_monte_carlo()
{
    Rng rng(424242);
    int outside = 0;
    double worst_z = 0.0;
    constexpr int kDraws = 100'000;
    for (int set = 0; set < 20; ++set) {
        SystemConfig cfg;
        cfg.num_bands = 1;
        cfg.num_sus = 1;
        cfg.slot_duration_s = 1e-3;
        cfg.sensing_duration_s = cfg.slot_duration_s * (0.05 + 0.3 * uniform01(rng));
        cfg.packet_bits = 200 + 1000 * uniform01(rng);
        const double w = 5e5 + 2e6 * uniform01(rng);
        cfg.bands = {BandConfig{w, 0.0, 1.0, 1.0}};
        const double snr = 1.0 + 30.0 * uniform01(rng);
        const double var = 0.2 + 2.0 * uniform01(rng);
        cfg.sus = {uniform_su(0.0, snr, var, 1)};

        const double analytic = secondary_success_prob(cfg, 0, 0);
        const double threshold =
            std::expm1(cfg.packet_bits / ((cfg.slot_duration_s - cfg.sensing_duration_s) * w) * std::log(2.0)) / snr;
        int hits = 0;
        for (int i = 0; i < kDraws; ++i)
            hits += exponential(rng, var) >= threshold;
        const double est = static_cast<double>(hits) / kDraws;
        const double se = std::sqrt(std::max(analytic * (1.0 - analytic), 1e-12) / kDraws);
        const double z = std::abs(est - analytic) / se;
        worst_z = std::max(worst_z, z);
        outside += z > 3.0;
    }
    return {outside == 0, "largest deviation " + fmt(worst_z) + " standard errors over 20 parameter sets"};
}

Outcome conservation_determinism(const std::vector<SimulationTrace>& traces)
{
    int broken = 0;
    for (const auto& t : traces)
        broken += conserved(t) ? 0 : 1;

    // Per-slot bookkeeping and bitwise reruns for each access scheme.
    const auto p = testing::two_band_success();
    const auto schedule = decompose(pad_to_doubly_stochastic(max_rate_lp(p, RegionQuery{1, {0.3, 0.0}}).omega_star));
    const std::vector<AccessVariant> variants{ScheduledAccess{schedule},
                                              RandomAccess{SelectionPolicy{Matrix{{0.4, 0.6}, {0.6, 0.4}}}},
                                              FixedAccess{{{1, 0}}}};
    const auto model = two_band_model({0.3, 0.4});
    SimulationOptions opt;
    opt.horizon = 50'000;
    opt.seed = 12;
    int step_errors = 0;
    int nondeterministic = 0;
    std::size_t checked = traces.size();
    for (const auto& access : variants) {
        std::vector<std::int64_t> expect_s;
        std::vector<std::int64_t> expect_p;
        const auto observer = [&](const SlotEvent& e) {
            if (!expect_s.empty()) {
                for (std::size_t k = 0; k < e.secondary_start.size(); ++k) {
                    const auto d = e.secondary_start[k] - expect_s[k];
                    step_errors += d == 0 || d == 1 ? 0 : 1;
                }
                for (std::size_t j = 0; j < e.primary_start.size(); ++j) {
                    const auto d = e.primary_start[j] - expect_p[j];
                    step_errors += d == 0 || d == 1 ? 0 : 1;
                }
            }
            expect_s = e.secondary_start;
            expect_p = e.primary_start;
            for (std::size_t k = 0; k < expect_s.size(); ++k)
                expect_s[k] -= e.su_departed[k] ? 1 : 0;
            for (std::size_t j = 0; j < expect_p.size(); ++j)
                expect_p[j] -= e.primary_departed[j] ? 1 : 0;
        };
        const auto a = run_slots(model, access, opt, observer);
        const auto b = run_slots(model, access, opt);
        broken += conserved(a) ? 0 : 1;
        nondeterministic += a.queue_samples == b.queue_samples && a.final_lengths == b.final_lengths
                                    && a.departures == b.departures && a.collisions == b.collisions
                                ? 0
                                : 1;
        checked += 1;
    }
    return {broken == 0 && step_errors == 0 && nondeterministic == 0,
            std::to_string(checked) + " traces: " + std::to_string(broken) + " conservation failures, "
                + std::to_string(step_errors) + " slot-update errors, " + std::to_string(nondeterministic)
                + " non-reproducible reruns"};
}

} // namespace

int main()
{
    std::vector<SimulationTrace> traces;
    criterion(1, "two-band envelope matches the closed form", 1.0, two_band_envelope);
    criterion(2, "reduced and assignment-weight programs agree", 30.0, lp_equivalence);
    criterion(3, "permutation decomposition round trip", 5.0, birkhoff_round_trip);
    criterion(4, "simulated stability at 90% / 110% of an envelope point", 120.0,
              [&] { return simulation_vs_region(traces); });
    criterion(5, "simulated band availability", 0.0, [&] { return availability_law(traces); });
    criterion(6, "fixed <= random access <= scheduled ordering", 0.0, proposition_ordering);
    criterion(7, "four-band slice shrinks under heavier load", 0.0, slice_shrinkage);
    criterion(8, "outage probability against channel-gain sampling", 0.0, outage_monte_carlo);
    criterion(9, "simulator conservation and determinism", 0.0, [&] { return conservation_determinism(traces); });
    std::printf("%d of 9 criteria failed\n", g_failures);
    return g_failures;
}
