#include <cogband/core_model.hpp>

#include <cogband/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cogband {

namespace {

// exp(-(2^x - 1) / snr_gain) with 2^x - 1 evaluated without cancellation.
double rayleigh_non_outage(double exponent_bits, double snr_gain)
{
    const double threshold = std::expm1(exponent_bits * std::numbers::ln2);
    return std::exp(-threshold / snr_gain);
}

void check_band(const SystemConfig& config, std::size_t band)
{
    if (band >= config.bands.size())
        throw DimensionError("band index " + std::to_string(band) + " out of range");
}

void check_su(const SystemConfig& config, std::size_t su)
{
    if (su >= config.sus.size())
        throw DimensionError("SU index " + std::to_string(su) + " out of range");
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

} // namespace

void SystemConfig::validate() const
{
    if (num_bands < 1 || num_sus < 1)
        throw ConfigError("need at least one band and one SU");
    if (bands.size() != num_bands)
        throw DimensionError("band list length differs from num_bands");
    if (sus.size() != num_sus)
        throw DimensionError("SU list length differs from num_sus");
    if (!(slot_duration_s > 0.0))
        throw InvalidTimingError("slot duration must be positive");
    if (!(sensing_duration_s >= 0.0) || !(sensing_duration_s < slot_duration_s))
        throw InvalidTimingError("sensing duration must satisfy 0 <= tau < T");
    if (!(packet_bits > 0.0))
        throw ConfigError("packet size must be positive");
    for (std::size_t j = 0; j < num_bands; ++j) {
        const auto& b = bands[j];
        if (!(b.bandwidth_hz >= 0.0))
            throw ConfigError("band " + std::to_string(j) + ": negative bandwidth");
        if (!is_probability(b.primary_arrival_rate))
            throw ConfigError("band " + std::to_string(j) + ": arrival rate outside [0, 1]");
        if (!(b.primary_snr > 0.0) || !(b.primary_channel_var > 0.0))
            throw ConfigError("band " + std::to_string(j) + ": primary SNR and variance must be positive");
    }
    for (std::size_t k = 0; k < num_sus; ++k) {
        const auto& s = sus[k];
        if (!is_probability(s.arrival_rate))
            throw ConfigError("SU " + std::to_string(k) + ": arrival rate outside [0, 1]");
        if (!(s.snr > 0.0))
            throw ConfigError("SU " + std::to_string(k) + ": SNR must be positive");
        if (s.channel_var_per_band.size() != num_bands)
            throw DimensionError("SU " + std::to_string(k) + ": need one channel variance per band");
        for (double v : s.channel_var_per_band)
            if (!(v > 0.0))
                throw ConfigError("SU " + std::to_string(k) + ": channel variance must be positive");
    }
}

SuConfig uniform_su(double arrival_rate, double snr, double channel_var, std::size_t num_bands)
{
    return SuConfig{arrival_rate, snr, std::vector<double>(num_bands, channel_var)};
}

void SuccessMatrix::validate() const
{
    if (values.empty())
        throw DimensionError("success matrix is empty");
    for (double v : values.data())
        if (!is_probability(v))
            throw DimensionError("success matrix entry outside [0, 1]");
}

double secondary_rate(const SystemConfig& config)
{
    const double airtime = config.slot_duration_s - config.sensing_duration_s;
    if (!(airtime > 0.0) || config.sensing_duration_s < 0.0)
        throw InvalidTimingError("sensing duration must satisfy 0 <= tau < T");
    return config.packet_bits / airtime;
}

double secondary_success_prob(const SystemConfig& config, std::size_t band, std::size_t su)
{
    check_band(config, band);
    check_su(config, su);
    const auto& b = config.bands[band];
    if (b.is_virtual())
        return 0.0;
    const auto& s = config.sus[su];
    const double airtime = config.slot_duration_s - config.sensing_duration_s;
    if (!(airtime > 0.0) || config.sensing_duration_s < 0.0)
        throw InvalidTimingError("sensing duration must satisfy 0 <= tau < T");
    // Same expression as the primary link so that tau = 0 agrees bit for bit.
    const double bits_per_hz = config.packet_bits / (airtime * b.bandwidth_hz);
    return rayleigh_non_outage(bits_per_hz, s.snr * s.channel_var_per_band.at(band));
}

double primary_success_prob(const SystemConfig& config, std::size_t band)
{
    check_band(config, band);
    const auto& b = config.bands[band];
    if (b.is_virtual())
        throw InvalidBandError("band " + std::to_string(band) + " is virtual and has no primary link");
    const double bits_per_hz = config.packet_bits / (config.slot_duration_s * b.bandwidth_hz);
    return rayleigh_non_outage(bits_per_hz, b.primary_snr * b.primary_channel_var);
}

double availability_from_rates(double arrival_rate, double service_rate)
{
    if (!(arrival_rate < service_rate))
        throw PrimaryUnstableError("primary queue unstable: arrival rate " + std::to_string(arrival_rate)
                                   + " >= service rate " + std::to_string(service_rate));
    return 1.0 - arrival_rate / service_rate;
}

double band_availability(const SystemConfig& config, std::size_t band)
{
    check_band(config, band);
    const auto& b = config.bands[band];
    if (b.is_virtual()) {
        if (b.primary_arrival_rate != 0.0)
            throw InvalidBandError("virtual band " + std::to_string(band) + " cannot carry primary traffic");
        return 1.0;
    }
    return availability_from_rates(b.primary_arrival_rate, primary_success_prob(config, band));
}

SuccessMatrix build_success_matrix(const SystemConfig& config)
{
    config.validate();
    Matrix p(config.num_bands, config.num_sus);
    for (std::size_t j = 0; j < config.num_bands; ++j) {
        const double pi = band_availability(config, j);
        for (std::size_t k = 0; k < config.num_sus; ++k)
            p(j, k) = pi * secondary_success_prob(config, j, k);
    }
    return SuccessMatrix{std::move(p)};
}

SuccessMatrix build_success_matrix(std::span<const double> availability, const Matrix& pout_bar)
{
    if (availability.size() != pout_bar.rows())
        throw DimensionError("availability vector length differs from band count");
    Matrix p(pout_bar.rows(), pout_bar.cols());
    for (std::size_t j = 0; j < p.rows(); ++j)
        for (std::size_t k = 0; k < p.cols(); ++k)
            p(j, k) = availability[j] * pout_bar(j, k);
    SuccessMatrix out{std::move(p)};
    out.validate();
    return out;
}

AssignmentCounts assignment_count(std::size_t num_bands, std::size_t num_sus)
{
    if (num_bands < 1 || num_sus < 1)
        throw DimensionError("assignment_count needs at least one band and one SU");
    constexpr auto max64 = std::numeric_limits<std::uint64_t>::max();

    // n! / (n - m)! as a falling product.
    const std::size_t n = std::max(num_bands, num_sus);
    const std::size_t m = std::min(num_bands, num_sus);
    std::uint64_t ordered = 1;
    for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t factor = n - i;
        if (ordered > max64 / factor)
            throw OverflowError("assignment count overflows 64 bits");
        ordered *= factor;
    }

    std::uint64_t free_choice = 1;
    for (std::size_t i = 0; i < num_sus; ++i) {
        if (free_choice > max64 / num_bands)
            throw OverflowError("free-choice assignment count overflows 64 bits");
        free_choice *= num_bands;
    }
    return {ordered, free_choice};
}

SuccessMatrix NetworkModel::success_matrix() const
{
    for (std::size_t j = 0; j < availability.size(); ++j)
        if (std::isnan(availability[j]))
            throw PrimaryUnstableError("band " + std::to_string(j) + " has an unstable primary queue");
    return build_success_matrix(availability, secondary_success);
}

void NetworkModel::validate() const
{
    const std::size_t mp = availability.size();
    const std::size_t ms = su_arrival.size();
    if (mp == 0 || ms == 0)
        throw ConfigError("network needs at least one band and one SU");
    if (primary_arrival.size() != mp || primary_success.size() != mp)
        throw DimensionError("per-band vectors differ in length");
    if (secondary_success.rows() != mp || secondary_success.cols() != ms)
        throw DimensionError("secondary success table must be bands x SUs");
    for (std::size_t j = 0; j < mp; ++j) {
        if (!is_probability(primary_arrival[j]) || !is_probability(primary_success[j]))
            throw ConfigError("band " + std::to_string(j) + ": primary rates outside [0, 1]");
        if (!std::isnan(availability[j]) && !is_probability(availability[j]))
            throw ConfigError("band " + std::to_string(j) + ": availability outside [0, 1]");
    }
    for (double v : secondary_success.data())
        if (!is_probability(v))
            throw ConfigError("secondary success probability outside [0, 1]");
    for (double v : su_arrival)
        if (!is_probability(v))
            throw ConfigError("SU arrival rate outside [0, 1]");
}

NetworkModel model_from_physical(const SystemConfig& config, PrimaryCheck check)
{
    config.validate();
    NetworkModel model;
    const std::size_t mp = config.num_bands;
    const std::size_t ms = config.num_sus;
    model.secondary_success = Matrix(mp, ms);
    for (std::size_t j = 0; j < mp; ++j) {
        const auto& b = config.bands[j];
        model.primary_arrival.push_back(b.primary_arrival_rate);
        if (b.is_virtual()) {
            model.primary_success.push_back(0.0);
            model.availability.push_back(band_availability(config, j));
        } else {
            const double mu = primary_success_prob(config, j);
            model.primary_success.push_back(mu);
            if (check == PrimaryCheck::AllowUnstable && !(b.primary_arrival_rate < mu))
                model.availability.push_back(std::numeric_limits<double>::quiet_NaN());
            else
                model.availability.push_back(availability_from_rates(b.primary_arrival_rate, mu));
        }
        for (std::size_t k = 0; k < ms; ++k)
            model.secondary_success(j, k) = secondary_success_prob(config, j, k);
    }
    for (const auto& s : config.sus)
        model.su_arrival.push_back(s.arrival_rate);
    model.physical = config;
    return model;
}

} // namespace cogband
