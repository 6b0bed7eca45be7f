#pragma once

// Slot-level simulation of the proposed system, the random-selection
// baseline and the fixed assignment, with Bernoulli arrivals, perfect
// sensing, outage-driven ACK/NACK and a late-arrival queue model:
//
//     Q(t+1) = max(Q(t) - D(t), 0) + A(t)
//
// Per slot: draw the SU-to-band assignment; primaries with a packet
// transmit; each SU senses its band and transmits only if the band's
// primary queue was empty at slot start and its own queue is not; failed
// packets stay at the head of the queue; arrivals join after departures.

#include <cogband/baselines.hpp>
#include <cogband/birkhoff.hpp>
#include <cogband/core_model.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

namespace cogband {

struct ScheduledAccess {
    PermutationSchedule schedule;
};

struct RandomAccess {
    SelectionPolicy policy;
};

struct FixedAccess {
    FixedAssignment assignment;
};

using AccessVariant = std::variant<ScheduledAccess, RandomAccess, FixedAccess>;

std::string_view variant_name(const AccessVariant& v);

enum class OutageModel {
    Bernoulli,   ///< success drawn with the analytic non-outage probability
    ChannelGain, ///< exponential gain drawn and compared with capacity; needs physical parameters
};

struct SimulationOptions {
    std::uint64_t horizon = 100'000;
    std::uint64_t seed = 1;
    std::size_t stride = 1; ///< keep every stride-th queue-length sample
    OutageModel outage = OutageModel::Bernoulli;
};

/// What happened in one slot; handed to an optional observer.
struct SlotEvent {
    std::uint64_t slot = 0;
    std::vector<std::int64_t> primary_start;   ///< primary queue lengths at slot start
    std::vector<std::int64_t> secondary_start; ///< SU queue lengths at slot start
    std::vector<std::size_t> band_of_su;       ///< kVirtualBand when idle or virtual
    std::vector<bool> su_transmitted;
    std::vector<bool> primary_departed;
    std::vector<bool> su_departed;
};

using SlotObserver = std::function<void(const SlotEvent&)>;

/// Queue ids: primaries 0..M_p-1, then SUs M_p..M_p+M_s-1.
struct SimulationTrace {
    std::uint64_t horizon = 0;
    std::uint64_t seed = 0;
    std::size_t stride = 1;
    std::size_t num_primary = 0;
    std::size_t num_secondary = 0;

    /// queue_samples[q][i] = length of queue q at the start of slot i*stride.
    std::vector<std::vector<std::int64_t>> queue_samples;
    std::vector<std::uint64_t> arrivals;
    std::vector<std::uint64_t> departures;
    std::vector<std::uint64_t> nonempty_slots; ///< slots that began with a packet queued
    std::vector<std::int64_t> final_lengths;
    std::vector<std::uint64_t> empty_slot_counts; ///< per primary
    std::uint64_t collisions = 0;                 ///< (band, slot) pairs with >= 2 SU transmissions
    std::vector<bool> primary_unstable;           ///< arrival rate >= service rate

    std::size_t num_queues() const noexcept { return num_primary + num_secondary; }
    std::size_t secondary_id(std::size_t su) const noexcept { return num_primary + su; }

    /// Departures per slot that started with a packet queued.
    double service_rate(std::size_t queue) const;
    double departure_rate(std::size_t queue) const;
};

/// Throws InvalidArgumentError/DimensionError when the variant does not fit
/// the model, and InvalidArgumentError for ChannelGain without physical
/// parameters.
SimulationTrace run_slots(const NetworkModel& model, const AccessVariant& access, const SimulationOptions& options,
                          const SlotObserver& observer = {});

/// Independent runs, one per seed, executed concurrently.
std::vector<SimulationTrace> run_seeds(const NetworkModel& model, const AccessVariant& access,
                                       const SimulationOptions& options, const std::vector<std::uint64_t>& seeds);

enum class Stability { Stable, Unstable, Indeterminate };

std::string_view to_string(Stability s);

struct StabilityVerdict {
    std::vector<Stability> per_queue;
    std::vector<double> drift_estimate; ///< packets/slot over the trailing window
};

inline constexpr double kDefaultDriftThreshold = 5e-4;
inline constexpr double kDefaultWindowFraction = 0.5;
inline constexpr std::uint64_t kMinVerdictHorizon = 10'000;

/// Least-squares slope of each queue over the trailing window. Stable when
/// the slope is below the threshold and the window maximum stays below
/// horizon^(2/3); unstable when the slope exceeds twice the threshold.
/// Throws HorizonTooShortError below kMinVerdictHorizon slots.
StabilityVerdict stability_verdict(const SimulationTrace& trace, double drift_threshold = kDefaultDriftThreshold,
                                   double window_fraction = kDefaultWindowFraction);

/// Fraction of slots in which the band's primary queue started empty.
double empirical_availability(const SimulationTrace& trace, std::size_t band);

} // namespace cogband
