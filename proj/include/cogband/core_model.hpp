#pragma once

// Physical-layer and queueing-parameter formulas: secondary transmission
// rate, Rayleigh-fading success probabilities, primary service rate, band
// availability, the per-(band, SU) success matrix, and assignment counting.

#include <cogband/matrix.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cogband {

struct BandConfig {
    double bandwidth_hz = 0.0;         ///< W_j; zero marks a virtual band
    double primary_arrival_rate = 0.0; ///< packets/slot, Bernoulli
    double primary_snr = 1.0;          ///< unit-gain received SNR
    double primary_channel_var = 1.0;  ///< mean of the exponential gain

    bool is_virtual() const noexcept { return bandwidth_hz == 0.0; }
};

struct SuConfig {
    double arrival_rate = 0.0; ///< packets/slot, Bernoulli
    double snr = 1.0;
    /// Mean channel gain towards the SU receiver, one entry per band.
    std::vector<double> channel_var_per_band;
};

struct SystemConfig {
    std::size_t num_bands = 0;
    std::size_t num_sus = 0;
    double slot_duration_s = 0.0;
    double sensing_duration_s = 0.0;
    double packet_bits = 0.0;
    std::vector<BandConfig> bands;
    std::vector<SuConfig> sus;

    /// Throws InvalidTimingError or DimensionError/ConfigError on a malformed
    /// description. Does not check primary stability.
    void validate() const;
};

/// Convenience builder: every SU uses the same channel variance on every band.
SuConfig uniform_su(double arrival_rate, double snr, double channel_var, std::size_t num_bands);

/// P[j][k] = pi_j * Pbar_out(j, k): probability that SU k, holding band j
/// with a nonempty queue, gets a packet through in a slot.
struct SuccessMatrix {
    Matrix values;

    std::size_t num_bands() const noexcept { return values.rows(); }
    std::size_t num_sus() const noexcept { return values.cols(); }
    double operator()(std::size_t band, std::size_t su) const { return values(band, su); }

    /// Throws DimensionError when empty or any entry lies outside [0, 1].
    void validate() const;
};

/// b / (T - tau), bits per second.
double secondary_rate(const SystemConfig& config);

/// Probability that SU `su` transmitting on band `band` is not in outage.
/// Exactly zero on a virtual band.
double secondary_success_prob(const SystemConfig& config, std::size_t band, std::size_t su);

/// Non-outage probability of the band's own primary link, which is also the
/// primary's mean service rate. Throws InvalidBandError on a virtual band.
double primary_success_prob(const SystemConfig& config, std::size_t band);

/// 1 - lambda/mu. Throws PrimaryUnstableError unless arrival < service.
double availability_from_rates(double arrival_rate, double service_rate);

/// Probability that the band's primary queue is empty. A virtual band with
/// no primary traffic is always available.
double band_availability(const SystemConfig& config, std::size_t band);

SuccessMatrix build_success_matrix(const SystemConfig& config);

/// Abstract route: entrywise pi_j * pout_bar(j, k), no normalization.
SuccessMatrix build_success_matrix(std::span<const double> availability, const Matrix& pout_bar);

struct AssignmentCounts {
    std::uint64_t system_s = 0;    ///< one SU per band: ordered selections
    std::uint64_t system_shat = 0; ///< free choice: M_p^M_s
};

/// Throws OverflowError when a count exceeds 64 bits.
AssignmentCounts assignment_count(std::size_t num_bands, std::size_t num_sus);

/// Resolved per-band and per-SU probabilities; what the region solvers and
/// the simulator consume. Built from physical parameters or supplied directly.
struct NetworkModel {
    std::vector<double> primary_arrival; ///< lambda_p per band
    std::vector<double> primary_success; ///< mu_p per band (0 for virtual bands)
    std::vector<double> availability;    ///< pi per band
    Matrix secondary_success;            ///< Pbar_out per (band, SU)
    std::vector<double> su_arrival;      ///< lambda_s per SU

    /// Present when the model came from physical parameters; enables
    /// channel-gain draws in the simulator.
    std::optional<SystemConfig> physical;

    std::size_t num_bands() const noexcept { return availability.size(); }
    std::size_t num_sus() const noexcept { return su_arrival.size(); }

    SuccessMatrix success_matrix() const;
    void validate() const;
};

enum class PrimaryCheck {
    Strict,        ///< unstable primaries raise PrimaryUnstableError
    AllowUnstable, ///< availability stored as NaN; simulation only
};

NetworkModel model_from_physical(const SystemConfig& config, PrimaryCheck check = PrimaryCheck::Strict);

} // namespace cogband
