#include "support.hpp"

#include <cogband/birkhoff.hpp>
#include <cogband/config_io.hpp>
#include <cogband/errors.hpp>
#include <cogband/simulator.hpp>

#include <doctest.h>

#include <sstream>

using namespace cogband;
using nlohmann::json;

namespace {

json physical_doc()
{
    return json::parse(R"({
        "slot": {"T": 1e-3, "tau": 1e-4, "b": 1000},
        "bands": [{"W": 1e6, "lambda_p": 0.3, "gamma_p": 10, "sigma2_p": 1},
                  {"W": 2e6, "lambda_p": 0.5, "gamma_p": 4, "sigma2_p": 1}],
        "sus": [{"name": "alpha", "lambda": 0.1, "gamma": 10, "sigma2": [1, 0.5]},
                {"name": "beta", "lambda": 0.2, "gamma": 3, "sigma2": 2}]
    })");
}

std::string error_text(const json& doc)
{
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("physical and abstract descriptions agree")
{
    const auto phys = parse_config(physical_doc());
    REQUIRE(phys.model.physical.has_value());
    CHECK(phys.su_names == std::vector<std::string>{"alpha", "beta"});
    CHECK(phys.model.su_arrival == std::vector<double>{0.1, 0.2});
    CHECK(phys.model.primary_success[0] == doctest::Approx(0.904837418035959573).epsilon(1e-15));

    json abstract;
    abstract["bands"] = json::array();
    for (std::size_t j = 0; j < 2; ++j)
        abstract["bands"].push_back(
            {{"pi", phys.model.availability[j]}, {"pout_bar_primary", phys.model.primary_success[j]}});
    abstract["sus"] = json::array();
    for (std::size_t k = 0; k < 2; ++k)
        abstract["sus"].push_back({{"lambda", phys.model.su_arrival[k]},
                                   {"pout_bar", std::vector<double>{phys.model.secondary_success(0, k),
                                                                    phys.model.secondary_success(1, k)}}});
    const auto abs = parse_config(abstract);
    CHECK_FALSE(abs.model.physical.has_value());
    CHECK(abs.su_names == std::vector<std::string>{"s1", "s2"});
    CHECK(max_abs_diff(abs.model.success_matrix().values, phys.model.success_matrix().values) <= 1e-15);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(abs.model.primary_arrival[j] == doctest::Approx(phys.model.primary_arrival[j]).epsilon(1e-12));

    // Both routes at once, consistent.
    auto both = physical_doc();
    both["bands"][0]["pi"] = phys.model.availability[0];
    both["sus"][1]["pout_bar"] = {phys.model.secondary_success(0, 1), phys.model.secondary_success(1, 1)};
    CHECK_NOTHROW(parse_config(both));

    // And inconsistent.
    both["bands"][0]["pi"] = phys.model.availability[0] + 1e-6;
    const auto msg = error_text(both);
    CHECK(msg.find("bands[0].pi") != std::string::npos);
}

TEST_CASE("every schema problem is reported at once")
{
    const auto doc = json::parse(R"({
        "slot": {"T": 1e-3, "tau": 2e-3, "b": 1000},
        "bands": [{"W": 1e6, "lambda_p": 1.5, "gamma_p": 10, "sigma2_p": 1}, {"foo": 1}],
        "sus": [{"lambda": "fast", "pout_bar": [0.5]}]
    })");
    const auto msg = error_text(doc);
    CHECK(msg.find("slot.tau") != std::string::npos);
    CHECK(msg.find("bands[0].lambda_p") != std::string::npos);
    CHECK(msg.find("bands[1]") != std::string::npos);
    CHECK(msg.find("sus[0].lambda") != std::string::npos);
    CHECK(msg.find("sus[0].pout_bar") != std::string::npos);

    CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[]"), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"bands": [{"pi": 0.5}], "sus": [
        {"name": "a", "pout_bar": [0.5]}, {"name": "a", "pout_bar": [0.5]}]})")),
                    ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("digest tracks the raw text")
{
    const std::string text = physical_doc().dump();
    CHECK(parse_config_text(text).digest == fnv1a_hex(text));
    CHECK(parse_config_text(text + " ").digest != fnv1a_hex(text));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("SU names and rate lists")
{
    const auto cfg = parse_config(physical_doc());
    CHECK(resolve_su(cfg, "alpha") == 0);
    CHECK(resolve_su(cfg, "beta") == 1);
    CHECK(resolve_su(cfg, "s2") == 1);
    CHECK(resolve_su(cfg, "1") == 0);
    CHECK_THROWS_AS(resolve_su(cfg, "s3"), ConfigError);
    CHECK_THROWS_AS(resolve_su(cfg, "gamma"), ConfigError);

    CHECK(parse_rate_list(cfg, "beta=0.25", {0.0, 0.0}) == std::vector<double>{0.0, 0.25});
    CHECK(parse_rate_list(cfg, "s1=0.1,s2=0.3", {0.0, 0.0}) == std::vector<double>{0.1, 0.3});
    CHECK(parse_rate_list(cfg, "", {0.5, 0.5}) == std::vector<double>{0.5, 0.5});
    CHECK_THROWS_AS(parse_rate_list(cfg, "alpha", {0.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(parse_rate_list(cfg, "alpha=x", {0.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(parse_rate_list(cfg, "alpha=1.5", {0.0, 0.0}), ConfigError);
}

TEST_CASE("schedule round trip")
{
    const Matrix omega{{0.2, 0.3}, {0.5, 0.1}, {0.1, 0.4}};
    const auto schedule = decompose(pad_to_doubly_stochastic(AssignmentMatrix{omega}));
    const auto doc = schedule_to_json(schedule);
    const auto back = schedule_from_json(json::parse(doc.dump()));
    CHECK(back.terms.size() == schedule.terms.size());
    CHECK(max_abs_diff(back.marginals(), omega) <= 1e-12);

    // Assignment-only form.
    json slim = doc;
    for (auto& t : slim["terms"])
        t.erase("permutation");
    const auto rebuilt = schedule_from_json(slim);
    CHECK(max_abs_diff(rebuilt.marginals(), omega) <= 1e-12);

    json bad = doc;
    bad["terms"][0]["q"] = 5.0;
    CHECK_THROWS_AS(schedule_from_json(bad), ConfigError);
    CHECK_THROWS_AS(schedule_from_json(json::object()), ConfigError);
    json small = slim;
    small["size"] = 1;
    CHECK_THROWS_AS(schedule_from_json(small), ConfigError);
    json twice = slim;
    twice["terms"][0]["assignment"] = {1, 1};
    CHECK_THROWS_AS(schedule_from_json(twice), ConfigError);
}

TEST_CASE("matrix and trace writers")
{
    const Matrix m{{0.1, 0.2}, {0.3, 0.4}};
    CHECK(matrix_from_json(matrix_to_json(m)) == m);
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1, 2], [3]]")), ConfigError);

    const auto model = testing::abstract_model({0.5}, Matrix{{0.8}}, {0.9}, {0.1});
    SimulationOptions opt;
    opt.horizon = 10'000;
    opt.stride = 5000;
    const auto trace = run_slots(model, FixedAccess{{{0}}}, opt);
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    std::istringstream lines(csv.str());
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line))
        all.push_back(line);
    REQUIRE(all.size() == 5);
    CHECK(all[0] == "slot,queue_id,kind,length");
    CHECK(all[1] == "0,0,primary,0");
    CHECK(all[2] == "0,1,secondary,0");
    CHECK(all[3].rfind("5000,0,primary,", 0) == 0);

    const auto summary = trace_summary(trace, stability_verdict(trace), {"only"});
    CHECK(summary["queues"][1]["name"] == "only");
    CHECK(summary["queues"][0].contains("pi_hat"));

    const RunManifest manifest{"region", "abc", {1, 2}, std::string(kToolVersion), utc_timestamp(), "mt19937_64"};
    const auto mj = to_json(manifest);
    CHECK(mj["seeds"].size() == 2);
    CHECK(mj["timestamp"].get<std::string>().size() == 20);
}
