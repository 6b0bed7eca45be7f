// cogband: stability regions, schedules, simulations and baseline
// comparisons for secondary users sharing licensed bands.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 infeasible rate
// point, 4 numerical failure.

#include <cogband/baselines.hpp>
#include <cogband/birkhoff.hpp>
#include <cogband/config_io.hpp>
#include <cogband/errors.hpp>
#include <cogband/rng.hpp>
#include <cogband/simulator.hpp>
#include <cogband/stability_region.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace {

using namespace cogband;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 2, kInfeasible = 3, kNumerical = 4 };

constexpr double kOrderingSlack = 1e-9;
constexpr double kClosedFormTol = 1e-8;

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string num(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string g_command_line;

RunManifest manifest(const std::string& command, const LoadedConfig& cfg, std::vector<std::uint64_t> seeds = {})
{
    return RunManifest{command, cfg.digest, std::move(seeds), std::string(kToolVersion), utc_timestamp(),
                       std::string(kRngAlgorithm)};
}

json manifest_json(const RunManifest& m)
{
    auto j = to_json(m);
    j["argv"] = g_command_line;
    return j;
}

// "-" writes to stdout; any other path is replaced atomically enough for a
// batch tool (truncate and write).
void write_text(const std::string& path, const std::string& text)
{
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write " + path);
    out << text;
    if (!out)
        throw ConfigError("write failed for " + path);
}

void write_json(const std::string& path, const json& doc)
{
    write_text(path, doc.dump(2) + "\n");
}

// CSV files carry their manifest in a sidecar next to them.
void write_csv(const std::string& path, const std::string& text, const RunManifest& m)
{
    write_text(path, text);
    if (path != "-")
        write_json(path + ".manifest.json", manifest_json(m));
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    try {
        while (std::getline(ss, item, ',')) {
            if (item.empty())
                continue;
            const auto dash = item.find('-');
            if (dash == std::string::npos) {
                seeds.push_back(std::stoull(item));
                continue;
            }
            const auto lo = std::stoull(item.substr(0, dash));
            const auto hi = std::stoull(item.substr(dash + 1));
            if (hi < lo || hi - lo > 10'000)
                throw ConfigError("bad seed range '" + item + "'");
            for (auto s = lo; s <= hi; ++s)
                seeds.push_back(s);
        }
    } catch (const std::logic_error&) {
        throw ConfigError("seeds must look like 1,2,3 or 1-5, got '" + text + "'");
    }
    if (seeds.empty())
        throw ConfigError("no seeds given");
    return seeds;
}

// Runs fn(i) for i in [0, n) on a bounded pool; results keep their index.
template <typename Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))>
{
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += workers)
                out[i] = fn(i);
        }));
    for (auto& j : jobs)
        j.get();
    return out;
}

SuccessMatrix swap_columns(const SuccessMatrix& p, std::size_t first, std::size_t second)
{
    Matrix m(p.num_bands(), 2);
    for (std::size_t j = 0; j < p.num_bands(); ++j) {
        m(j, 0) = p(j, first);
        m(j, 1) = p(j, second);
    }
    return SuccessMatrix{m};
}

// ---------------------------------------------------------------- region

struct RegionArgs {
    std::string config;
    std::string target = "s2";
    std::string sweep = "s1";
    std::string fixed;
    std::size_t grid = 101;
    std::string out = "-";
};

int cmd_region(const RegionArgs& a)
{
    const auto cfg = load_config(a.config);
    const auto p = cfg.model.success_matrix();
    const auto target = resolve_su(cfg, a.target);
    const auto sweep = resolve_su(cfg, a.sweep);
    const auto rates = parse_rate_list(cfg, a.fixed, std::vector<double>(p.num_sus(), 0.0));
    const auto points = envelope_sweep(p, target, sweep, rates, a.grid);

    const bool two_by_two = p.num_bands() == 2 && p.num_sus() == 2;
    const auto p_cf = two_by_two ? swap_columns(p, sweep, target) : p;
    double worst = 0.0;

    std::ostringstream csv;
    csv << "lambda_sweep,lambda_target_max,feasible,epsilon_or_blank\n";
    for (const auto& pt : points) {
        const double x = pt.rates[sweep];
        std::string eps;
        if (two_by_two) {
            const auto cf = closed_form_2x2(p_cf, x);
            if (cf.feasible != pt.feasible && std::abs(x - std::max(p_cf(0, 0), p_cf(1, 0))) > kClosedFormTol)
                throw NumericalError("closed form and LP disagree on feasibility at " + num(x));
            if (cf.feasible && pt.feasible) {
                worst = std::max(worst, std::abs(cf.lambda_s2_max - pt.rates[target]));
                eps = num(cf.epsilon);
            }
        }
        csv << num(x) << ',' << (pt.feasible ? num(pt.rates[target]) : "") << ',' << (pt.feasible ? 1 : 0) << ','
            << eps << '\n';
    }
    if (worst > kClosedFormTol)
        throw NumericalError("closed form and LP differ by " + num(worst));

    write_csv(a.out, csv.str(), manifest("region", cfg));
    if (a.out != "-") {
        std::cout << "region: " << points.size() << " points, " << cfg.su_names[target] << " max "
                  << num(points.front().rates[target]) << " at " << cfg.su_names[sweep] << "=0";
        if (two_by_two)
            std::cout << ", closed-form max deviation " << num(worst);
        std::cout << '\n';
    }
    return kOk;
}

// ------------------------------------------------------------- decompose

struct DecomposeArgs {
    std::string config;
    std::string rates;
    std::string target;
    std::string sweep;
    std::size_t grid = 21;
    std::string out = "-";
};

struct Decomposed {
    EnvelopePoint point;
    PermutationSchedule schedule;
    std::size_t padded_size = 0;
    double reconstruction_error = 0.0;
};

Decomposed decompose_point(EnvelopePoint point)
{
    Decomposed d;
    d.point = std::move(point);
    if (!d.point.feasible)
        return d;
    const auto ds = pad_to_doubly_stochastic(d.point.omega_star);
    d.padded_size = ds.size();
    d.schedule = decompose(ds);
    d.reconstruction_error = max_abs_diff(reconstruct(d.schedule).values, ds.values);
    return d;
}

int cmd_decompose(const DecomposeArgs& a)
{
    const auto cfg = load_config(a.config);
    const auto p = cfg.model.success_matrix();
    const std::size_t target = a.target.empty() ? p.num_sus() - 1 : resolve_su(cfg, a.target);
    const auto rates = parse_rate_list(cfg, a.rates, cfg.model.su_arrival);
    const auto m = manifest("decompose", cfg);

    if (!a.sweep.empty()) {
        const auto sweep = resolve_su(cfg, a.sweep);
        const auto envelope = envelope_sweep(p, target, sweep, rates, a.grid);
        const auto steps = parallel_map(envelope.size(), [&](std::size_t i) { return decompose_point(envelope[i]); });
        json trajectory = json::array();
        double worst = 0.0;
        for (const auto& d : steps) {
            json row{{"lambda_sweep", d.point.rates[sweep]}, {"feasible", d.point.feasible}};
            if (d.point.feasible) {
                row["lambda_target_max"] = d.point.target_rate(target);
                row["reconstruction_error"] = d.reconstruction_error;
                row["schedule"] = schedule_to_json(d.schedule);
                worst = std::max(worst, d.reconstruction_error);
            }
            trajectory.push_back(std::move(row));
        }
        write_json(a.out, json{{"manifest", manifest_json(m)},
                               {"target", cfg.su_names[target]},
                               {"sweep", cfg.su_names[sweep]},
                               {"rates", rates},
                               {"trajectory", trajectory}});
        std::cerr << "reconstruction error (max over " << steps.size() << " points): " << num(worst) << '\n';
        return worst > kResidualStop ? kNumerical : kOk;
    }

    const auto d = decompose_point(max_rate_lp(p, RegionQuery{target, rates}));
    if (!d.point.feasible)
        throw InfeasibleError("rates are outside the stability region of the other SUs");
    if (rates[target] > d.point.target_rate(target) + kFeasibilityTol)
        throw InfeasibleError("rate " + num(rates[target]) + " for " + cfg.su_names[target]
                              + " exceeds the envelope value " + num(d.point.target_rate(target)));

    write_json(a.out, json{{"manifest", manifest_json(m)},
                           {"target", cfg.su_names[target]},
                           {"rates", rates},
                           {"lambda_target_max", d.point.target_rate(target)},
                           {"omega", matrix_to_json(d.point.omega_star.omega)},
                           {"padded_size", d.padded_size},
                           {"reconstruction_error", d.reconstruction_error},
                           {"schedule", schedule_to_json(d.schedule)}});
    std::cerr << "terms: " << d.schedule.terms.size() << ", reconstruction error: " << num(d.reconstruction_error)
              << '\n';
    return d.reconstruction_error > kResidualStop ? kNumerical : kOk;
}

// -------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config;
    std::string variant = "S";
    std::string schedule;
    std::string gamma;
    std::string map;
    std::string rates;
    std::uint64_t horizon = 100'000;
    std::string seeds = "1";
    std::size_t stride = 1;
    std::string outage = "bernoulli";
    std::string out = "-";
    std::string trace_prefix;
};

AccessVariant build_access(const SimulateArgs& a, const LoadedConfig& cfg)
{
    if (a.variant == "S") {
        if (a.schedule.empty())
            throw ConfigError("variant S needs --schedule");
        auto doc = read_json_file(a.schedule);
        if (doc.contains("schedule"))
            doc = doc.at("schedule");
        return ScheduledAccess{schedule_from_json(doc)};
    }
    if (a.variant == "Shat") {
        if (a.gamma.empty())
            throw ConfigError("variant Shat needs --gamma");
        auto doc = read_json_file(a.gamma);
        if (doc.is_object() && doc.contains("gamma"))
            doc = doc.at("gamma");
        return RandomAccess{SelectionPolicy{matrix_from_json(doc)}};
    }
    if (a.variant == "Fixed") {
        if (a.map.empty())
            throw ConfigError("variant Fixed needs --map");
        FixedAssignment f;
        std::stringstream ss(a.map);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t band = 0;
            const auto r = std::from_chars(item.data(), item.data() + item.size(), band);
            if (r.ec != std::errc{} || r.ptr != item.data() + item.size() || band < 1
                || band > cfg.model.num_bands())
                throw ConfigError("--map needs 1-based band numbers, got '" + item + "'");
            f.band_of_su.push_back(band - 1);
        }
        return FixedAccess{f};
    }
    throw ConfigError("unknown variant '" + a.variant + "' (S, Shat or Fixed)");
}

int cmd_simulate(const SimulateArgs& a)
{
    const auto cfg = load_config(a.config);
    NetworkModel model = cfg.model;
    model.su_arrival = parse_rate_list(cfg, a.rates, model.su_arrival);
    const auto access = build_access(a, cfg);
    const auto seeds = parse_seeds(a.seeds);

    SimulationOptions opt;
    opt.horizon = a.horizon;
    opt.stride = a.stride;
    if (a.outage == "gain")
        opt.outage = OutageModel::ChannelGain;
    else if (a.outage != "bernoulli")
        throw ConfigError("--outage must be bernoulli or gain");

    const auto traces = run_seeds(model, access, opt, seeds);
    const bool judged = a.horizon >= kMinVerdictHorizon;
    const std::size_t nq = traces.front().num_queues();

    json runs = json::array();
    std::vector<std::array<std::size_t, 3>> votes(nq, {0, 0, 0});
    for (const auto& t : traces) {
        StabilityVerdict v;
        if (judged) {
            v = stability_verdict(t);
        } else {
            v.per_queue.assign(nq, Stability::Indeterminate);
            v.drift_estimate.assign(nq, std::nan(""));
        }
        for (std::size_t q = 0; q < nq; ++q)
            ++votes[q][static_cast<std::size_t>(v.per_queue[q])];
        runs.push_back(trace_summary(t, v, cfg.su_names));
    }

    json merged = json::array();
    for (std::size_t q = 0; q < nq; ++q) {
        Stability s = Stability::Indeterminate;
        for (auto cand : {Stability::Stable, Stability::Unstable})
            if (2 * votes[q][static_cast<std::size_t>(cand)] > traces.size())
                s = cand;
        const bool primary = q < model.num_bands();
        const std::string name = primary ? "p" + std::to_string(q + 1) : cfg.su_names[q - model.num_bands()];
        merged.push_back({{"queue_id", q},
                          {"name", name},
                          {"verdict", to_string(s)},
                          {"stable_votes", votes[q][0]},
                          {"unstable_votes", votes[q][1]}});
        if (!primary)
            std::cout << name << ": " << to_string(s) << " (" << votes[q][0] << " stable, " << votes[q][1]
                      << " unstable of " << traces.size() << ")\n";
    }

    const auto m = manifest("simulate", cfg, seeds);
    write_json(a.out, json{{"manifest", manifest_json(m)},
                           {"variant", variant_name(access)},
                           {"horizon", a.horizon},
                           {"su_arrival", model.su_arrival},
                           {"verdict_available", judged},
                           {"runs", runs},
                           {"merged", merged}});

    if (!a.trace_prefix.empty()) {
        for (const auto& t : traces) {
            std::ostringstream csv;
            write_trace_csv(csv, t);
            write_csv(a.trace_prefix + "_seed" + std::to_string(t.seed) + ".csv", csv.str(),
                      manifest("simulate", cfg, {t.seed}));
        }
    }
    return kOk;
}

// --------------------------------------------------------------- compare

struct CompareArgs {
    std::string config;
    std::string queries;
    std::string target;
    std::string out = "-";
    std::size_t restarts = ShatOptions{}.restarts;
    std::size_t iterations = ShatOptions{}.iterations;
    std::uint64_t seed = 1;
};

struct CompareRow {
    EnvelopePoint s;
    ShatOptimum shat;
    std::optional<FixedOptimum> fixed;
};

int cmd_compare(const CompareArgs& a)
{
    const auto cfg = load_config(a.config);
    const auto p = cfg.model.success_matrix();
    const auto doc = read_json_file(a.queries);
    const json points = doc.is_array() ? doc : doc.value("points", json::array());
    std::string target_name = a.target;
    if (target_name.empty())
        target_name = doc.is_object() ? doc.value("target", cfg.su_names.back()) : cfg.su_names.back();
    const auto target = resolve_su(cfg, target_name);
    if (!points.is_array() || points.empty())
        throw ConfigError("queries file needs a nonempty \"points\" array");

    std::vector<RegionQuery> queries;
    for (const auto& pt : points) {
        if (!pt.is_object())
            throw ConfigError("each query point must map SU names to rates");
        std::vector<double> rates(p.num_sus(), 0.0);
        for (const auto& [name, value] : pt.items()) {
            if (!value.is_number())
                throw ConfigError("query rate for " + name + " must be a number");
            rates[resolve_su(cfg, name)] = value.get<double>();
        }
        queries.push_back({target, rates});
    }

    ShatOptions opt;
    opt.restarts = a.restarts;
    opt.iterations = a.iterations;
    opt.seed = a.seed;
    const bool fixed_defined = p.num_bands() >= p.num_sus();
    const auto rows = parallel_map(queries.size(), [&](std::size_t i) {
        CompareRow r;
        r.s = max_rate_lp(p, queries[i]);
        r.shat = shat_optimize(p, queries[i], opt);
        if (fixed_defined)
            r.fixed = best_fixed_envelope(p, queries[i]);
        return r;
    });

    const auto cell = [](bool feasible, double v) { return feasible ? num(v) : std::string{}; };
    std::ostringstream csv;
    csv << "query,rates,lambda_s,lambda_shat,lambda_fixed,ordering_ok\n";
    std::size_t violations = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string rates;
        for (std::size_t k = 0; k < p.num_sus(); ++k)
            if (k != target)
                rates += (rates.empty() ? "" : ";") + cfg.su_names[k] + "=" + num(queries[i].rates[k]);
        bool ok = !r.shat.feasible || (r.s.feasible && r.shat.lambda_max <= r.s.target_rate(target) + kOrderingSlack);
        if (r.fixed && r.fixed->feasible)
            ok = ok && r.shat.feasible && r.fixed->lambda_max <= r.shat.lambda_max + kOrderingSlack;
        violations += ok ? 0 : 1;
        csv << i << ',' << rates << ',' << cell(r.s.feasible, r.s.target_rate(target)) << ','
            << cell(r.shat.feasible, r.shat.lambda_max) << ','
            << (r.fixed ? cell(r.fixed->feasible, r.fixed->lambda_max) : std::string{}) << ',' << (ok ? 1 : 0)
            << '\n';
    }
    write_csv(a.out, csv.str(), manifest("compare", cfg, {a.seed}));
    if (violations > 0)
        throw NumericalError(std::to_string(violations) + " queries violate fixed <= Shat <= S");
    if (a.out != "-")
        std::cout << "compare: " << rows.size() << " queries, ordering holds\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    for (int i = 0; i < argc; ++i)
        g_command_line += (i ? " " : "") + std::string(argv[i]);

    CLI::App app{"Stability regions, schedules and simulations for secondary spectrum access"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    RegionArgs region;
    auto* r = app.add_subcommand("region", "Trace the envelope of one SU's rate against another's");
    r->add_option("config", region.config, "JSON network description")->required()->check(CLI::ExistingFile);
    r->add_option("--target", region.target, "SU whose maximum rate is computed")->capture_default_str();
    r->add_option("--sweep", region.sweep, "SU whose rate is swept from zero to its maximum")->capture_default_str();
    r->add_option("--fixed", region.fixed, "Rates of the remaining SUs, e.g. s3=0.35,s4=0.35");
    r->add_option("--grid", region.grid, "Number of sweep points")->capture_default_str()->check(CLI::Range(2, 1'000'000));
    r->add_option("--out", region.out, "CSV output path, - for stdout")->capture_default_str();

    DecomposeArgs dec;
    auto* d = app.add_subcommand("decompose", "Optimal assignment at a rate point, split into permutation weights");
    d->add_option("config", dec.config, "JSON network description")->required()->check(CLI::ExistingFile);
    d->add_option("--rates", dec.rates, "SU rates, e.g. s1=0.5,s2=0.4 (default: config rates)");
    d->add_option("--target", dec.target, "SU whose rate is maximized (default: last SU)");
    d->add_option("--sweep", dec.sweep, "Emit a trajectory over this SU's rate instead of one point");
    d->add_option("--grid", dec.grid, "Trajectory points with --sweep")->capture_default_str()->check(CLI::Range(2, 100'000));
    d->add_option("--out", dec.out, "JSON output path, - for stdout")->capture_default_str();

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Slot-level simulation of one access scheme");
    s->add_option("config", sim.config, "JSON network description")->required()->check(CLI::ExistingFile);
    s->add_option("--variant", sim.variant, "S, Shat or Fixed")
        ->capture_default_str()
        ->check(CLI::IsMember({"S", "Shat", "Fixed"}));
    s->add_option("--schedule", sim.schedule, "Schedule JSON (variant S), e.g. decompose output");
    s->add_option("--gamma", sim.gamma, "Selection probability matrix JSON, bands x SUs (variant Shat)");
    s->add_option("--map", sim.map, "1-based band per SU, e.g. 2,1 (variant Fixed)");
    s->add_option("--rates", sim.rates, "Override SU arrival rates, e.g. s1=0.45");
    s->add_option("--horizon", sim.horizon, "Slots per run")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--seeds", sim.seeds, "Seeds, e.g. 1,2,3 or 1-5")->capture_default_str();
    s->add_option("--stride", sim.stride, "Keep every n-th queue sample")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--outage", sim.outage, "bernoulli or gain")->capture_default_str()->check(CLI::IsMember({"bernoulli", "gain"}));
    s->add_option("--out", sim.out, "Summary JSON path, - for stdout")->capture_default_str();
    s->add_option("--trace-prefix", sim.trace_prefix, "Write per-seed queue traces to <prefix>_seed<n>.csv");

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "Envelope values of the scheduled, random and fixed systems");
    c->add_option("config", cmp.config, "JSON network description")->required()->check(CLI::ExistingFile);
    c->add_option("--queries", cmp.queries, "JSON {\"target\": name, \"points\": [{name: rate}, ...]}")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--target", cmp.target, "Overrides the target named in the queries file");
    c->add_option("--out", cmp.out, "CSV output path, - for stdout")->capture_default_str();
    c->add_option("--restarts", cmp.restarts, "Random starts for the random-access optimizer")->capture_default_str();
    c->add_option("--iterations", cmp.iterations, "Local-search iterations per start")->capture_default_str();
    c->add_option("--seed", cmp.seed, "Optimizer seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (r->parsed())
            return cmd_region(region);
        if (d->parsed())
            return cmd_decompose(dec);
        if (s->parsed())
            return cmd_simulate(sim);
        return cmd_compare(cmp);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const DecompositionError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
