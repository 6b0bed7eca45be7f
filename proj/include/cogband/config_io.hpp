#pragma once

// JSON configuration ingest and artifact writers for the command-line tool.
//
// Config schema (either parameterization per entry; both may be given and
// must then agree to within 1e-12):
//
//   {
//     "slot":  {"T": 1e-3, "tau": 1e-4, "b": 1000},
//     "bands": [ {"W": 1e6, "lambda_p": 0.3, "gamma_p": 10, "sigma2_p": 1}
//              | {"pi": 0.45, "pout_bar_primary": 0.9} ],
//     "sus":   [ {"name": "s1", "lambda": 0.1, "gamma": 10, "sigma2": 1 | [per band]}
//              | {"name": "s1", "lambda": 0.1, "pout_bar": [per band]} ]
//   }

#include <cogband/birkhoff.hpp>
#include <cogband/core_model.hpp>
#include <cogband/simulator.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cogband {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct LoadedConfig {
    NetworkModel model;
    std::vector<std::string> su_names;
    std::string digest; ///< FNV-1a 64 of the raw document, hex
};

/// Throws ConfigError listing every schema problem found.
LoadedConfig parse_config(const nlohmann::json& doc);
LoadedConfig parse_config_text(const std::string& text);
LoadedConfig load_config(const std::filesystem::path& path);

std::string fnv1a_hex(std::string_view bytes);

/// Resolves "s2", "2" (1-based) or a configured name to a 0-based SU index.
/// Throws ConfigError when unknown.
std::size_t resolve_su(const LoadedConfig& cfg, const std::string& token);

/// Parses "name=rate,name=rate" into a full per-SU vector (unlisted SUs
/// keep `defaults`).
std::vector<double> parse_rate_list(const LoadedConfig& cfg, const std::string& list, std::vector<double> defaults);

struct RunManifest {
    std::string command;
    std::string config_digest;
    std::vector<std::uint64_t> seeds;
    std::string tool_version{kToolVersion};
    std::string timestamp;
    std::string rng_algorithm;
};

nlohmann::json to_json(const RunManifest& m);
std::string utc_timestamp();

/// {"bands", "sus", "size", "terms": [{"assignment": [1-based band per SU,
/// 0 = virtual], "permutation": [...padded rows...], "q": weight}]}
nlohmann::json schedule_to_json(const PermutationSchedule& schedule);

/// Accepts the schedule_to_json layout. "permutation" is optional; when
/// absent, the padded columns take the unused rows in ascending order.
PermutationSchedule schedule_from_json(const nlohmann::json& doc);

/// Rows = bands, columns = SUs.
Matrix matrix_from_json(const nlohmann::json& rows);
nlohmann::json matrix_to_json(const Matrix& m);

/// CSV rows (slot, queue_id, kind, length) at the trace's stride.
void write_trace_csv(std::ostream& out, const SimulationTrace& trace);

/// Empirical rates, availabilities, verdicts and collision counts.
nlohmann::json trace_summary(const SimulationTrace& trace, const StabilityVerdict& verdict,
                             const std::vector<std::string>& su_names);

} // namespace cogband
