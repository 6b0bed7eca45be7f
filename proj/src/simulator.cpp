#include <cogband/simulator.hpp>

#include <cogband/errors.hpp>
#include <cogband/rng.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <string>

namespace cogband {

namespace {

// Outage thresholds on the exponential channel gain, precomputed for the
// ChannelGain model. A packet gets through iff gain >= threshold.
struct GainThresholds {
    std::vector<double> primary_threshold;
    std::vector<double> primary_mean;
    Matrix secondary_threshold;
    Matrix secondary_mean;
};

GainThresholds gain_thresholds(const SystemConfig& cfg)
{
    GainThresholds g;
    const double airtime = cfg.slot_duration_s - cfg.sensing_duration_s;
    const double inf = std::numeric_limits<double>::infinity();
    g.secondary_threshold = Matrix(cfg.num_bands, cfg.num_sus);
    g.secondary_mean = Matrix(cfg.num_bands, cfg.num_sus);
    for (std::size_t j = 0; j < cfg.num_bands; ++j) {
        const auto& b = cfg.bands[j];
        if (b.is_virtual()) {
            g.primary_threshold.push_back(inf);
        } else {
            const double bits_per_hz = cfg.packet_bits / (cfg.slot_duration_s * b.bandwidth_hz);
            g.primary_threshold.push_back(std::expm1(bits_per_hz * std::numbers::ln2) / b.primary_snr);
        }
        g.primary_mean.push_back(b.primary_channel_var);
        for (std::size_t k = 0; k < cfg.num_sus; ++k) {
            const auto& s = cfg.sus[k];
            g.secondary_threshold(j, k) =
                b.is_virtual() ? inf : std::expm1(cfg.packet_bits / (airtime * b.bandwidth_hz) * std::numbers::ln2) / s.snr;
            g.secondary_mean(j, k) = s.channel_var_per_band[j];
        }
    }
    return g;
}

void check_access(const NetworkModel& model, const AccessVariant& access)
{
    const std::size_t mp = model.num_bands();
    const std::size_t ms = model.num_sus();
    if (const auto* s = std::get_if<ScheduledAccess>(&access)) {
        if (s->schedule.real_bands != mp || s->schedule.real_sus != ms)
            throw DimensionError("schedule shape differs from the network");
        s->schedule.validate();
    } else if (const auto* r = std::get_if<RandomAccess>(&access)) {
        if (r->policy.gamma.rows() != mp || r->policy.gamma.cols() != ms)
            throw DimensionError("selection policy shape differs from the network");
        r->policy.validate();
    } else if (const auto* f = std::get_if<FixedAccess>(&access)) {
        if (f->assignment.band_of_su.size() != ms)
            throw DimensionError("fixed assignment needs one band per SU");
        f->assignment.validate(mp);
    }
}

} // namespace

std::string_view variant_name(const AccessVariant& v)
{
    switch (v.index()) {
    case 0:
        return "S";
    case 1:
        return "Shat";
    default:
        return "Fixed";
    }
}

double SimulationTrace::service_rate(std::size_t queue) const
{
    const auto busy = nonempty_slots.at(queue);
    return busy == 0 ? 0.0 : static_cast<double>(departures.at(queue)) / static_cast<double>(busy);
}

double SimulationTrace::departure_rate(std::size_t queue) const
{
    return horizon == 0 ? 0.0 : static_cast<double>(departures.at(queue)) / static_cast<double>(horizon);
}

SimulationTrace run_slots(const NetworkModel& model, const AccessVariant& access, const SimulationOptions& options,
                          const SlotObserver& observer)
{
    model.validate();
    check_access(model, access);
    if (options.horizon < 1)
        throw InvalidArgumentError("horizon must be at least one slot");
    if (options.stride < 1)
        throw InvalidArgumentError("sample stride must be at least one");

    const std::size_t mp = model.num_bands();
    const std::size_t ms = model.num_sus();
    const bool gain_draws = options.outage == OutageModel::ChannelGain;
    GainThresholds gains;
    if (gain_draws) {
        if (!model.physical)
            throw InvalidArgumentError("channel-gain outage needs physical link parameters");
        gains = gain_thresholds(*model.physical);
    }

    SimulationTrace trace;
    trace.horizon = options.horizon;
    trace.seed = options.seed;
    trace.stride = options.stride;
    trace.num_primary = mp;
    trace.num_secondary = ms;
    const std::size_t nq = mp + ms;
    trace.queue_samples.assign(nq, {});
    const auto samples = static_cast<std::size_t>((options.horizon + options.stride - 1) / options.stride);
    for (auto& s : trace.queue_samples)
        s.reserve(samples);
    trace.arrivals.assign(nq, 0);
    trace.departures.assign(nq, 0);
    trace.nonempty_slots.assign(nq, 0);
    trace.empty_slot_counts.assign(mp, 0);
    for (std::size_t j = 0; j < mp; ++j)
        trace.primary_unstable.push_back(!(model.primary_arrival[j] < model.primary_success[j]));

    std::vector<std::int64_t> qp(mp, 0);
    std::vector<std::int64_t> qs(ms, 0);
    std::vector<std::size_t> band_of(ms, kVirtualBand);
    std::vector<bool> busy(mp);
    std::vector<bool> p_departed(mp);
    std::vector<bool> s_departed(ms);
    std::vector<bool> transmitted(ms);
    std::vector<std::size_t> transmitters_on(mp);

    if (const auto* f = std::get_if<FixedAccess>(&access))
        band_of = f->assignment.band_of_su;

    Rng rng(options.seed);
    SlotEvent event;

    for (std::uint64_t t = 0; t < options.horizon; ++t) {
        if (t % options.stride == 0) {
            for (std::size_t j = 0; j < mp; ++j)
                trace.queue_samples[j].push_back(qp[j]);
            for (std::size_t k = 0; k < ms; ++k)
                trace.queue_samples[mp + k].push_back(qs[k]);
        }
        if (observer) {
            event.slot = t;
            event.primary_start = qp;
            event.secondary_start = qs;
        }

        // (a) band assignment for this slot
        if (const auto* s = std::get_if<ScheduledAccess>(&access)) {
            const auto& term = s->schedule.terms[sample_permutation(s->schedule, rng)];
            for (std::size_t k = 0; k < ms; ++k)
                band_of[k] = term.band_of[k] < mp ? term.band_of[k] : kVirtualBand;
        } else if (const auto* r = std::get_if<RandomAccess>(&access)) {
            for (std::size_t k = 0; k < ms; ++k) {
                const double u = uniform01(rng);
                double acc = 0.0;
                band_of[k] = kVirtualBand;
                for (std::size_t j = 0; j < mp; ++j) {
                    acc += r->policy.gamma(j, k);
                    if (u < acc) {
                        band_of[k] = j;
                        break;
                    }
                }
            }
        }

        // (b) primaries with a packet transmit
        for (std::size_t j = 0; j < mp; ++j) {
            busy[j] = qp[j] > 0;
            p_departed[j] = false;
            if (!busy[j]) {
                ++trace.empty_slot_counts[j];
                continue;
            }
            ++trace.nonempty_slots[j];
            p_departed[j] = gain_draws ? exponential(rng, gains.primary_mean[j]) >= gains.primary_threshold[j]
                                       : bernoulli(rng, model.primary_success[j]);
        }

        // (c) SUs sense their band and transmit into idle ones
        std::fill(transmitters_on.begin(), transmitters_on.end(), 0);
        for (std::size_t k = 0; k < ms; ++k) {
            if (qs[k] > 0)
                ++trace.nonempty_slots[mp + k];
            const std::size_t j = band_of[k];
            transmitted[k] = j != kVirtualBand && !busy[j] && qs[k] > 0;
            if (transmitted[k])
                ++transmitters_on[j];
        }
        for (std::size_t j = 0; j < mp; ++j)
            if (transmitters_on[j] >= 2)
                ++trace.collisions;
        for (std::size_t k = 0; k < ms; ++k) {
            s_departed[k] = false;
            if (!transmitted[k])
                continue;
            const std::size_t j = band_of[k];
            const bool through = gain_draws
                                     ? exponential(rng, gains.secondary_mean(j, k)) >= gains.secondary_threshold(j, k)
                                     : bernoulli(rng, model.secondary_success(j, k));
            s_departed[k] = through && transmitters_on[j] == 1;
        }

        // (d) ACKed packets leave; NACKed ones stay at the head
        for (std::size_t j = 0; j < mp; ++j)
            if (p_departed[j]) {
                --qp[j];
                ++trace.departures[j];
            }
        for (std::size_t k = 0; k < ms; ++k)
            if (s_departed[k]) {
                --qs[k];
                ++trace.departures[mp + k];
            }

        // (e) late arrivals
        for (std::size_t j = 0; j < mp; ++j)
            if (bernoulli(rng, model.primary_arrival[j])) {
                ++qp[j];
                ++trace.arrivals[j];
            }
        for (std::size_t k = 0; k < ms; ++k)
            if (bernoulli(rng, model.su_arrival[k])) {
                ++qs[k];
                ++trace.arrivals[mp + k];
            }

        if (observer) {
            event.band_of_su = band_of;
            event.su_transmitted = transmitted;
            event.primary_departed = p_departed;
            event.su_departed = s_departed;
            observer(event);
        }
    }

    trace.final_lengths = qp;
    trace.final_lengths.insert(trace.final_lengths.end(), qs.begin(), qs.end());
    return trace;
}

std::vector<SimulationTrace> run_seeds(const NetworkModel& model, const AccessVariant& access,
                                       const SimulationOptions& options, const std::vector<std::uint64_t>& seeds)
{
    std::vector<std::future<SimulationTrace>> jobs;
    jobs.reserve(seeds.size());
    for (auto seed : seeds) {
        SimulationOptions opt = options;
        opt.seed = seed;
        jobs.push_back(std::async(std::launch::async, [&model, &access, opt] { return run_slots(model, access, opt); }));
    }
    std::vector<SimulationTrace> out;
    out.reserve(jobs.size());
    for (auto& j : jobs)
        out.push_back(j.get());
    return out;
}

std::string_view to_string(Stability s)
{
    switch (s) {
    case Stability::Stable:
        return "stable";
    case Stability::Unstable:
        return "unstable";
    default:
        return "indeterminate";
    }
}

StabilityVerdict stability_verdict(const SimulationTrace& trace, double drift_threshold, double window_fraction)
{
    if (trace.horizon < kMinVerdictHorizon)
        throw HorizonTooShortError("stability verdict needs at least " + std::to_string(kMinVerdictHorizon)
                                   + " slots, got " + std::to_string(trace.horizon));
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw InvalidArgumentError("window fraction must lie in (0, 1]");

    const double window_start = static_cast<double>(trace.horizon) * (1.0 - window_fraction);
    const double cap = std::pow(static_cast<double>(trace.horizon), 2.0 / 3.0);

    StabilityVerdict v;
    for (const auto& series : trace.queue_samples) {
        // Two passes: window means, then centered moments.
        std::size_t first = 0;
        while (first < series.size() && static_cast<double>(first * trace.stride) < window_start)
            ++first;
        const double n = static_cast<double>(series.size() - first);
        double mx = 0.0;
        double my = 0.0;
        std::int64_t peak = 0;
        for (std::size_t i = first; i < series.size(); ++i) {
            mx += static_cast<double>(i * trace.stride);
            my += static_cast<double>(series[i]);
            peak = std::max(peak, series[i]);
        }
        double slope = 0.0;
        if (n >= 2.0) {
            mx /= n;
            my /= n;
            double vxx = 0.0;
            double vxy = 0.0;
            for (std::size_t i = first; i < series.size(); ++i) {
                const double dx = static_cast<double>(i * trace.stride) - mx;
                vxx += dx * dx;
                vxy += dx * (static_cast<double>(series[i]) - my);
            }
            slope = vxx > 0.0 ? vxy / vxx : 0.0;
        }
        Stability s = Stability::Indeterminate;
        if (slope < drift_threshold && static_cast<double>(peak) < cap)
            s = Stability::Stable;
        else if (slope > 2.0 * drift_threshold)
            s = Stability::Unstable;
        v.per_queue.push_back(s);
        v.drift_estimate.push_back(slope);
    }
    return v;
}

double empirical_availability(const SimulationTrace& trace, std::size_t band)
{
    if (band >= trace.num_primary)
        throw DimensionError("band index out of range");
    return static_cast<double>(trace.empty_slot_counts[band]) / static_cast<double>(trace.horizon);
}

} // namespace cogband
