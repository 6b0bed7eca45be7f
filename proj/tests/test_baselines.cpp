#include "support.hpp"

#include <cogband/baselines.hpp>
#include <cogband/errors.hpp>

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace cogband;

TEST_CASE("saturated random-access rates")
{
    const auto p = testing::two_band_success();

    auto mu = shat_service_rates_saturated(p, SelectionPolicy{Matrix::identity(2)});
    CHECK(mu[0] == doctest::Approx(0.175).epsilon(1e-15));
    CHECK(mu[1] == doctest::Approx(0.7875).epsilon(1e-15));

    mu = shat_service_rates_saturated(p, SelectionPolicy{Matrix{{1, 1}, {0, 0}}});
    CHECK(mu[0] == 0.0);
    CHECK(mu[1] == 0.0);

    mu = shat_service_rates_saturated(p, SelectionPolicy{Matrix{{0.5, 0.5}, {0.5, 0.5}}});
    CHECK(mu[0] == doctest::Approx(0.21875).epsilon(1e-15));
    CHECK(mu[1] == doctest::Approx(0.25 * (0.2125 + 0.7875)).epsilon(1e-15));

    const SuccessMatrix single{Matrix{{0.3}, {0.6}}};
    mu = shat_service_rates_saturated(single, SelectionPolicy{Matrix{{0.25}, {0.75}}});
    CHECK(mu[0] == doctest::Approx(0.25 * 0.3 + 0.75 * 0.6).epsilon(1e-15));
}

TEST_CASE("conditional random-access rates")
{
    const auto p = testing::two_band_success();
    const SelectionPolicy half{Matrix{{0.5, 0.5}, {0.5, 0.5}}};
    const std::vector<double> never_empty{0.0, 0.0};
    const std::vector<double> always_empty{1.0, 1.0};

    const auto sat = shat_service_rates_saturated(p, half);
    const auto c0 = shat_service_rate_conditional(p, half, never_empty);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(c0[k] == doctest::Approx(sat[k]).epsilon(1e-15));

    const auto c1 = shat_service_rate_conditional(p, half, always_empty);
    CHECK(c1[0] == doctest::Approx(0.5 * 0.175 + 0.5 * 0.7).epsilon(1e-15));
    CHECK(c1[1] == doctest::Approx(0.5 * 0.2125 + 0.5 * 0.7875).epsilon(1e-15));

    // Idle competitors can only help.
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto pm = testing::random_success(3, 3, rng);
        Matrix g(3, 3);
        for (std::size_t k = 0; k < 3; ++k) {
            double left = 1.0;
            for (std::size_t j = 0; j < 3; ++j) {
                g(j, k) = left * uniform01(rng);
                left -= g(j, k);
            }
        }
        const SelectionPolicy pol{g};
        const std::vector<double> e{uniform01(rng), uniform01(rng), uniform01(rng)};
        const auto s = shat_service_rates_saturated(pm, pol);
        const auto c = shat_service_rate_conditional(pm, pol, e);
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(c[k] >= s[k] - 1e-15);
    }

    CHECK_THROWS_AS(shat_service_rate_conditional(p, half, std::vector<double>{0.0}), DimensionError);
}

TEST_CASE("policy validation")
{
    const auto p = testing::two_band_success();
    CHECK_THROWS_AS(shat_service_rates_saturated(p, SelectionPolicy{Matrix{{0.7, 0.5}, {0.6, 0.5}}}),
                    ConstraintViolationError);
    CHECK_THROWS_AS(shat_service_rates_saturated(p, SelectionPolicy{Matrix{{0.5}, {0.5}}}), DimensionError);
}

TEST_CASE("fixed assignment")
{
    const auto p = testing::two_band_success();
    auto mu = fixed_assignment_rates(p, FixedAssignment{{0, 1}});
    CHECK(mu[0] == doctest::Approx(0.175).epsilon(1e-15));
    CHECK(mu[1] == doctest::Approx(0.7875).epsilon(1e-15));
    mu = fixed_assignment_rates(p, FixedAssignment{{1, 0}});
    CHECK(mu[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(mu[1] == doctest::Approx(0.2125).epsilon(1e-15));

    auto best = best_fixed_envelope(p, RegionQuery{1, {0.1, 0.0}});
    REQUIRE(best.feasible);
    CHECK(best.lambda_max == doctest::Approx(0.7875).epsilon(1e-15));
    best = best_fixed_envelope(p, RegionQuery{1, {0.5, 0.0}});
    REQUIRE(best.feasible);
    CHECK(best.lambda_max == doctest::Approx(0.2125).epsilon(1e-15));
    CHECK(best.assignment.band_of_su == std::vector<std::size_t>{1, 0});
    CHECK_FALSE(best_fixed_envelope(p, RegionQuery{1, {0.75, 0.0}}).feasible);

    CHECK_THROWS_AS(fixed_assignment_rates(p, FixedAssignment{{0, 0}}), InvalidArgumentError);
    CHECK_THROWS_AS(fixed_assignment_rates(p, FixedAssignment{{0, 2}}), InvalidArgumentError);
    CHECK_THROWS_AS(fixed_assignment_rates(p, FixedAssignment{{0}}), DimensionError);
    const SuccessMatrix wide{Matrix{{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}}};
    CHECK_THROWS_AS(best_fixed_envelope(wide, RegionQuery{0, {0.0, 0.0, 0.0}}), InvalidArgumentError);
}

TEST_CASE("random-access optimizer")
{
    const auto p = testing::two_band_success();
    ShatOptions fast;
    fast.restarts = 16;
    fast.iterations = 1500;

    SUBCASE("single SU puts all mass on its best band")
    {
        const SuccessMatrix single{Matrix{{0.3}, {0.6}, {0.45}}};
        const auto opt = shat_optimize(single, RegionQuery{0, {0.0}}, fast);
        REQUIRE(opt.feasible);
        CHECK(opt.lambda_max == doctest::Approx(0.6).epsilon(1e-12));
    }
    SUBCASE("an idle competitor leaves the target its best band")
    {
        const auto opt = shat_optimize(p, RegionQuery{1, {0.0, 0.0}}, fast);
        REQUIRE(opt.feasible);
        CHECK(opt.lambda_max >= 0.7875 - 1e-12);
    }
    SUBCASE("the returned policy meets every competing rate")
    {
        const auto opt = shat_optimize(p, RegionQuery{1, {0.4, 0.0}}, fast);
        REQUIRE(opt.feasible);
        opt.gamma_star.validate();
        const auto mu = shat_service_rates_saturated(p, opt.gamma_star);
        CHECK(mu[0] >= 0.4 - 1e-12);
        CHECK(mu[1] == doctest::Approx(opt.lambda_max).epsilon(1e-12));
    }
    SUBCASE("beyond every single band is infeasible")
    {
        CHECK_FALSE(shat_optimize(p, RegionQuery{1, {0.71, 0.0}}, fast).feasible);
    }
}

TEST_CASE("ordering of the three systems")
{
    const auto p = testing::two_band_success();
    for (double l1 : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}) {
        const RegionQuery q{1, {l1, 0.0}};
        const auto s = max_rate_lp(p, q);
        const auto shat = shat_optimize(p, q);
        const auto fixed = best_fixed_envelope(p, q);
        REQUIRE(s.feasible);
        REQUIRE(shat.feasible);
        REQUIRE(fixed.feasible);
        CHECK(fixed.lambda_max <= shat.lambda_max + 1e-9);
        CHECK(shat.lambda_max <= s.rates[1] + 1e-9);
    }

    // Strict gap at lambda1 = 0.4: S reaches 0.5410714..., the best fixed
    // assignment 0.2125 and random access about 0.2201.
    const RegionQuery q{1, {0.4, 0.0}};
    const auto s = max_rate_lp(p, q);
    const auto shat = shat_optimize(p, q);
    CHECK(s.rates[1] == doctest::Approx(0.5410714285714286).epsilon(1e-12));
    CHECK(shat.lambda_max >= 0.2200);
    CHECK(shat.lambda_max < s.rates[1] - 0.3);
}

TEST_CASE("random-access rates are symmetric under band relabeling")
{
    Rng rng(11);
    for (int i = 0; i < 30; ++i) {
        const auto pm = testing::random_success(4, 3, rng);
        Matrix g(4, 3);
        for (std::size_t k = 0; k < 3; ++k) {
            double left = 1.0;
            for (std::size_t j = 0; j < 4; ++j) {
                g(j, k) = left * uniform01(rng);
                left -= g(j, k);
            }
        }
        const auto perm = testing::random_permutation(4, rng);
        Matrix pp(4, 3);
        Matrix gp(4, 3);
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 3; ++k) {
                pp(perm[j], k) = pm(j, k);
                gp(perm[j], k) = g(j, k);
            }
        const auto a = shat_service_rates_saturated(pm, SelectionPolicy{g});
        const auto b = shat_service_rates_saturated(SuccessMatrix{pp}, SelectionPolicy{gp});
        double total = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-14));
            total += a[k];
        }
        // At most one success per band per slot.
        double best_total = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            double m = 0.0;
            for (std::size_t k = 0; k < 3; ++k)
                m = std::max(m, pm(j, k));
            best_total += m;
        }
        CHECK(total <= best_total + 1e-12);
    }
}
