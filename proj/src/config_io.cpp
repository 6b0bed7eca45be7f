#include <cogband/config_io.hpp>

#include <cogband/errors.hpp>
#include <cogband/rng.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace cogband {

using nlohmann::json;

namespace {

constexpr double kAgreementTol = 1e-12;

// Collects schema problems so one report covers the whole document.
class Issues {
public:
    void add(std::string msg) { items_.push_back(std::move(msg)); }
    bool empty() const { return items_.empty(); }

    [[noreturn]] void raise() const
    {
        std::string text = "invalid configuration (" + std::to_string(items_.size()) + " problem"
                           + (items_.size() == 1 ? "" : "s") + "):";
        for (const auto& i : items_)
            text += "\n  - " + i;
        throw ConfigError(text);
    }

private:
    std::vector<std::string> items_;
};

std::optional<double> number_at(const json& obj, const char* key, const std::string& where, Issues& issues)
{
    if (!obj.contains(key))
        return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        issues.add(where + "." + key + " must be a number");
        return std::nullopt;
    }
    return v.get<double>();
}

bool has_any(const json& obj, std::initializer_list<const char*> keys)
{
    return std::any_of(keys.begin(), keys.end(), [&](const char* k) { return obj.contains(k); });
}

void check_unit(std::optional<double> v, const std::string& what, Issues& issues)
{
    if (v && !(*v >= 0.0 && *v <= 1.0))
        issues.add(what + " must lie in [0, 1]");
}

void check_agree(double physical, double given, const std::string& what, Issues& issues)
{
    if (std::abs(physical - given) > kAgreementTol) {
        std::ostringstream os;
        os << std::setprecision(17) << what << ": physical value " << physical << " disagrees with given " << given;
        issues.add(os.str());
    }
}

} // namespace

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

LoadedConfig parse_config(const json& doc)
{
    Issues issues;
    if (!doc.is_object())
        throw ConfigError("invalid configuration: top level must be an object");

    const json bands = doc.value("bands", json::array());
    const json sus = doc.value("sus", json::array());
    if (!bands.is_array() || bands.empty())
        issues.add("bands must be a nonempty array");
    if (!sus.is_array() || sus.empty())
        issues.add("sus must be a nonempty array");
    if (!issues.empty())
        issues.raise();

    const std::size_t mp = bands.size();
    const std::size_t ms = sus.size();

    // Physical description, filled where the document provides it.
    SystemConfig sys;
    sys.num_bands = mp;
    sys.num_sus = ms;
    bool have_slot = false;
    if (doc.contains("slot")) {
        const auto& slot = doc.at("slot");
        if (!slot.is_object()) {
            issues.add("slot must be an object");
        } else {
            const auto t = number_at(slot, "T", "slot", issues);
            const auto tau = number_at(slot, "tau", "slot", issues);
            const auto b = number_at(slot, "b", "slot", issues);
            if (!t || !b)
                issues.add("slot needs T and b");
            sys.slot_duration_s = t.value_or(0.0);
            sys.sensing_duration_s = tau.value_or(0.0);
            sys.packet_bits = b.value_or(0.0);
            if (t && !(*t > 0.0))
                issues.add("slot.T must be positive");
            if (t && !(sys.sensing_duration_s >= 0.0 && sys.sensing_duration_s < *t))
                issues.add("slot.tau must satisfy 0 <= tau < T");
            if (b && !(*b > 0.0))
                issues.add("slot.b must be positive");
            have_slot = t && b;
        }
    }

    NetworkModel model;
    model.primary_arrival.assign(mp, 0.0);
    model.primary_success.assign(mp, 0.0);
    model.availability.assign(mp, 1.0);
    model.secondary_success = Matrix(mp, ms);
    model.su_arrival.assign(ms, 0.0);

    std::vector<bool> band_physical(mp, false);
    for (std::size_t j = 0; j < mp; ++j) {
        const std::string where = "bands[" + std::to_string(j) + "]";
        const auto& b = bands[j];
        if (!b.is_object()) {
            issues.add(where + " must be an object");
            continue;
        }
        const auto w = number_at(b, "W", where, issues);
        const auto lam = number_at(b, "lambda_p", where, issues);
        const auto gam = number_at(b, "gamma_p", where, issues);
        const auto var = number_at(b, "sigma2_p", where, issues);
        const auto pi = number_at(b, "pi", where, issues);
        const auto mu = number_at(b, "pout_bar_primary", where, issues);
        check_unit(lam, where + ".lambda_p", issues);
        check_unit(pi, where + ".pi", issues);
        check_unit(mu, where + ".pout_bar_primary", issues);

        BandConfig bc;
        if (w) {
            band_physical[j] = true;
            bc.bandwidth_hz = *w;
            bc.primary_arrival_rate = lam.value_or(0.0);
            bc.primary_snr = gam.value_or(1.0);
            bc.primary_channel_var = var.value_or(1.0);
            if (*w < 0.0)
                issues.add(where + ".W must be nonnegative");
            if (*w > 0.0 && (!lam || !gam || !var))
                issues.add(where + ": physical band needs lambda_p, gamma_p and sigma2_p");
            if ((gam && !(*gam > 0.0)) || (var && !(*var > 0.0)))
                issues.add(where + ": gamma_p and sigma2_p must be positive");
            if (*w == 0.0 && lam && *lam != 0.0)
                issues.add(where + ": a virtual band cannot carry primary traffic");
        } else if (!pi) {
            issues.add(where + ": give either W (physical) or pi (abstract)");
        } else if (has_any(b, {"lambda_p", "gamma_p", "sigma2_p"})) {
            issues.add(where + ": physical fields without W");
        }
        sys.bands.push_back(bc);
    }

    std::vector<bool> su_physical(ms, false);
    std::vector<std::vector<double>> su_pout(ms);
    LoadedConfig out;
    for (std::size_t k = 0; k < ms; ++k) {
        const std::string where = "sus[" + std::to_string(k) + "]";
        const auto& s = sus[k];
        out.su_names.push_back("s" + std::to_string(k + 1));
        if (!s.is_object()) {
            issues.add(where + " must be an object");
            sys.sus.push_back({});
            continue;
        }
        if (s.contains("name")) {
            if (s.at("name").is_string())
                out.su_names.back() = s.at("name").get<std::string>();
            else
                issues.add(where + ".name must be a string");
        }
        const auto lam = number_at(s, "lambda", where, issues);
        check_unit(lam, where + ".lambda", issues);
        model.su_arrival[k] = lam.value_or(0.0);

        SuConfig sc;
        sc.arrival_rate = model.su_arrival[k];
        const auto gam = number_at(s, "gamma", where, issues);
        if (gam || s.contains("sigma2")) {
            su_physical[k] = true;
            sc.snr = gam.value_or(1.0);
            if (!gam || !(*gam > 0.0))
                issues.add(where + ".gamma must be a positive number");
            if (!s.contains("sigma2")) {
                issues.add(where + ": physical SU needs sigma2");
            } else if (s.at("sigma2").is_number()) {
                sc.channel_var_per_band.assign(mp, s.at("sigma2").get<double>());
            } else if (s.at("sigma2").is_array() && s.at("sigma2").size() == mp
                       && std::all_of(s.at("sigma2").begin(), s.at("sigma2").end(),
                                      [](const json& v) { return v.is_number(); })) {
                sc.channel_var_per_band = s.at("sigma2").get<std::vector<double>>();
            } else {
                issues.add(where + ".sigma2 must be a number or one number per band");
            }
            for (double v : sc.channel_var_per_band)
                if (!(v > 0.0))
                    issues.add(where + ".sigma2 entries must be positive");
        }
        if (s.contains("pout_bar")) {
            const auto& pb = s.at("pout_bar");
            if (pb.is_array() && pb.size() == mp
                && std::all_of(pb.begin(), pb.end(), [](const json& v) { return v.is_number(); })) {
                su_pout[k] = pb.get<std::vector<double>>();
                for (double v : su_pout[k])
                    if (!(v >= 0.0 && v <= 1.0))
                        issues.add(where + ".pout_bar entries must lie in [0, 1]");
            } else {
                issues.add(where + ".pout_bar must hold one number per band");
            }
        }
        if (!su_physical[k] && su_pout[k].empty())
            issues.add(where + ": give either gamma/sigma2 (physical) or pout_bar (abstract)");
        sys.sus.push_back(std::move(sc));
    }

    const bool any_physical_su = std::any_of(su_physical.begin(), su_physical.end(), [](bool b) { return b; });
    const bool any_physical_band = std::any_of(band_physical.begin(), band_physical.end(), [](bool b) { return b; });
    if ((any_physical_su || any_physical_band) && !have_slot)
        issues.add("physical parameters need slot.T and slot.b");
    if (any_physical_su && !std::all_of(band_physical.begin(), band_physical.end(), [](bool b) { return b; }))
        issues.add("physical SU parameters need W on every band");
    if (!issues.empty())
        issues.raise();

    // Resolve the probabilities, cross-checking both routes where given.
    for (std::size_t j = 0; j < mp; ++j) {
        const std::string where = "bands[" + std::to_string(j) + "]";
        const auto& b = bands[j];
        if (band_physical[j]) {
            const auto& bc = sys.bands[j];
            model.primary_arrival[j] = bc.primary_arrival_rate;
            if (bc.is_virtual()) {
                model.primary_success[j] = 0.0;
                model.availability[j] = 1.0;
            } else {
                const double mu = primary_success_prob(sys, j);
                model.primary_success[j] = mu;
                if (bc.primary_arrival_rate < mu) {
                    model.availability[j] = 1.0 - bc.primary_arrival_rate / mu;
                } else {
                    model.availability[j] = std::numeric_limits<double>::quiet_NaN();
                    if (b.contains("pi"))
                        issues.add(where + ": primary queue unstable, pi undefined");
                }
                if (b.contains("pout_bar_primary"))
                    check_agree(mu, b.at("pout_bar_primary").get<double>(), where + ".pout_bar_primary", issues);
            }
            if (b.contains("pi") && !std::isnan(model.availability[j]))
                check_agree(model.availability[j], b.at("pi").get<double>(), where + ".pi", issues);
        } else {
            const double pi = b.at("pi").get<double>();
            const double mu = b.value("pout_bar_primary", 1.0);
            if (!(pi > 0.0))
                issues.add(where + ".pi must be positive for a stable primary");
            model.availability[j] = pi;
            model.primary_success[j] = mu;
            model.primary_arrival[j] = mu * (1.0 - pi);
        }
    }
    for (std::size_t k = 0; k < ms; ++k) {
        for (std::size_t j = 0; j < mp; ++j) {
            if (su_physical[k]) {
                const double p = secondary_success_prob(sys, j, k);
                model.secondary_success(j, k) = p;
                if (!su_pout[k].empty())
                    check_agree(p, su_pout[k][j],
                                "sus[" + std::to_string(k) + "].pout_bar[" + std::to_string(j) + "]", issues);
            } else {
                model.secondary_success(j, k) = su_pout[k][j];
            }
        }
    }
    if (!issues.empty())
        issues.raise();

    const bool fully_physical = std::all_of(band_physical.begin(), band_physical.end(), [](bool b) { return b; })
                                && std::all_of(su_physical.begin(), su_physical.end(), [](bool b) { return b; });
    if (fully_physical)
        model.physical = sys;

    std::vector<std::string> sorted = out.su_names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError("invalid configuration: SU names must be unique");

    out.model = std::move(model);
    out.digest = fnv1a_hex(doc.dump());
    return out;
}

LoadedConfig parse_config_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    auto cfg = parse_config(doc);
    cfg.digest = fnv1a_hex(text);
    return cfg;
}

LoadedConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open configuration file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::size_t resolve_su(const LoadedConfig& cfg, const std::string& token)
{
    for (std::size_t k = 0; k < cfg.su_names.size(); ++k)
        if (cfg.su_names[k] == token)
            return k;
    std::string digits = token;
    if (!digits.empty() && (digits[0] == 's' || digits[0] == 'S'))
        digits.erase(0, 1);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        const auto idx = std::stoul(digits);
        if (idx >= 1 && idx <= cfg.su_names.size())
            return idx - 1;
    }
    throw ConfigError("unknown SU '" + token + "'");
}

std::vector<double> parse_rate_list(const LoadedConfig& cfg, const std::string& list, std::vector<double> defaults)
{
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("rate entry '" + item + "' must look like name=rate");
        const auto k = resolve_su(cfg, item.substr(0, eq));
        try {
            defaults.at(k) = std::stod(item.substr(eq + 1));
        } catch (const std::invalid_argument&) {
            throw ConfigError("rate entry '" + item + "' has a non-numeric rate");
        }
        if (!(defaults[k] >= 0.0 && defaults[k] <= 1.0))
            throw ConfigError("rate entry '" + item + "' must lie in [0, 1]");
    }
    return defaults;
}

json to_json(const RunManifest& m)
{
    return json{{"command", m.command},         {"config_digest", m.config_digest}, {"seeds", m.seeds},
                {"tool_version", m.tool_version}, {"timestamp", m.timestamp},     {"rng", m.rng_algorithm}};
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r)
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    return rows;
}

Matrix matrix_from_json(const json& rows)
{
    if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
        throw ConfigError("matrix must be a nonempty array of rows");
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != m.cols())
            throw ConfigError("matrix rows must have equal length");
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (!rows[r][c].is_number())
                throw ConfigError("matrix entries must be numbers");
            m(r, c) = rows[r][c].get<double>();
        }
    }
    return m;
}

json schedule_to_json(const PermutationSchedule& schedule)
{
    json terms = json::array();
    for (std::size_t i = 0; i < schedule.terms.size(); ++i) {
        const auto real = schedule.real_assignment(i);
        std::vector<std::size_t> one_based(real.size());
        for (std::size_t k = 0; k < real.size(); ++k)
            one_based[k] = real[k] == kVirtualBand ? 0 : real[k] + 1;
        terms.push_back({{"assignment", one_based},
                         {"permutation", schedule.terms[i].band_of},
                         {"q", schedule.terms[i].weight}});
    }
    return json{{"bands", schedule.real_bands}, {"sus", schedule.real_sus}, {"size", schedule.size()},
                {"terms", terms}};
}

PermutationSchedule schedule_from_json(const json& doc)
{
    try {
        PermutationSchedule s;
        s.real_bands = doc.at("bands").get<std::size_t>();
        s.real_sus = doc.at("sus").get<std::size_t>();
        const std::size_t n = doc.value("size", std::max(s.real_bands, s.real_sus));
        if (n < std::max(s.real_bands, s.real_sus))
            throw ConfigError("schedule size smaller than the network");
        for (const auto& t : doc.at("terms")) {
            ScheduleTerm term;
            term.weight = t.at("q").get<double>();
            if (t.contains("permutation")) {
                term.band_of = t.at("permutation").get<std::vector<std::size_t>>();
            } else {
                const auto assignment = t.at("assignment").get<std::vector<std::size_t>>();
                if (assignment.size() != s.real_sus)
                    throw ConfigError("schedule assignment needs one band per SU");
                std::vector<bool> used(n, false);
                term.band_of.assign(n, n);
                for (std::size_t k = 0; k < s.real_sus; ++k) {
                    if (assignment[k] == 0)
                        continue;
                    if (assignment[k] > s.real_bands)
                        throw ConfigError("schedule names a band out of range");
                    term.band_of[k] = assignment[k] - 1;
                    used[assignment[k] - 1] = true;
                }
                // Idle real SUs need a virtual band; padded SUs take what is left.
                const auto fill = [&](std::size_t col, std::size_t first_row) {
                    std::size_t row = first_row;
                    while (row < n && used[row])
                        ++row;
                    if (row >= n)
                        throw ConfigError("schedule assignment cannot be completed to a permutation");
                    term.band_of[col] = row;
                    used[row] = true;
                };
                for (std::size_t k = 0; k < s.real_sus; ++k)
                    if (term.band_of[k] == n)
                        fill(k, s.real_bands);
                for (std::size_t c = s.real_sus; c < n; ++c)
                    fill(c, 0);
            }
            s.terms.push_back(std::move(term));
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed schedule: ") + e.what());
    } catch (const ConstraintViolationError& e) {
        throw ConfigError(std::string("invalid schedule: ") + e.what());
    }
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace)
{
    out << "slot,queue_id,kind,length\n";
    const std::size_t samples = trace.queue_samples.empty() ? 0 : trace.queue_samples[0].size();
    for (std::size_t i = 0; i < samples; ++i) {
        const auto slot = static_cast<std::uint64_t>(i) * trace.stride;
        for (std::size_t q = 0; q < trace.num_queues(); ++q)
            out << slot << ',' << q << ',' << (q < trace.num_primary ? "primary" : "secondary") << ','
                << trace.queue_samples[q][i] << '\n';
    }
}

json trace_summary(const SimulationTrace& trace, const StabilityVerdict& verdict,
                   const std::vector<std::string>& su_names)
{
    json queues = json::array();
    for (std::size_t q = 0; q < trace.num_queues(); ++q) {
        const bool primary = q < trace.num_primary;
        json e{{"queue_id", q},
               {"kind", primary ? "primary" : "secondary"},
               {"name", primary ? "p" + std::to_string(q + 1) : su_names.at(q - trace.num_primary)},
               {"arrivals", trace.arrivals[q]},
               {"departures", trace.departures[q]},
               {"final_length", trace.final_lengths[q]},
               {"arrival_rate", static_cast<double>(trace.arrivals[q]) / static_cast<double>(trace.horizon)},
               {"departure_rate", trace.departure_rate(q)},
               {"service_rate", trace.service_rate(q)},
               {"verdict", to_string(verdict.per_queue.at(q))},
               {"drift", verdict.drift_estimate.at(q)}};
        if (primary) {
            e["pi_hat"] = empirical_availability(trace, q);
            e["unstable_primary"] = static_cast<bool>(trace.primary_unstable[q]);
        }
        queues.push_back(std::move(e));
    }
    return json{{"seed", trace.seed},       {"horizon", trace.horizon},   {"rng", kRngAlgorithm},
                {"collisions", trace.collisions}, {"queues", queues}};
}

} // namespace cogband
