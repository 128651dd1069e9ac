#include <doctest.h>

#include <cmath>

#include "bcrisk/cox.hpp"
#include "bcrisk/errors.hpp"
#include "helpers.hpp"

using namespace bcrisk;

namespace {

// Two-group exponential survival with a known hazard ratio and uniform
// administrative censoring.
cox::CoxInput simulate_two_group(Rng& rng, std::size_t n, double hazard_ratio,
                                 double base_rate = 0.05, double censor_horizon = 30.0) {
    cox::CoxInput data;
    data.num_covariates = 1;
    data.names = {"group"};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < n / 2 ? 0.0 : 1.0;
        const double rate = base_rate * std::pow(hazard_ratio, x);
        const double event_time = -std::log(1.0 - rng.next_double()) / rate;
        const double censor_time = rng.next_uniform(0.0, censor_horizon);
        data.times.push_back(std::min(event_time, censor_time));
        data.events.push_back(event_time <= censor_time ? 1 : 0);
        data.covariates.push_back(x);
    }
    return data;
}

cox::CoxInput noise_covariate(Rng& rng, std::size_t n) {
    cox::CoxInput data;
    data.num_covariates = 1;
    data.names = {"noise"};
    for (std::size_t i = 0; i < n; ++i) {
        data.times.push_back(-std::log(1.0 - rng.next_double()) / 0.05);
        data.events.push_back(rng.next_double() < 0.7 ? 1 : 0);
        data.covariates.push_back(rng.next_normal());
    }
    return data;
}

}  // namespace

TEST_CASE("recovers the generating hazard ratio") {
    Rng rng(61);
    const auto data = simulate_two_group(rng, 500, 2.0);
    const auto fit = cox::fit(data);
    REQUIRE(fit.converged);
    CHECK(fit.hazard_ratio[0] > 1.7);
    CHECK(fit.hazard_ratio[0] < 2.35);
    CHECK(fit.ci_low[0] < fit.hazard_ratio[0]);
    CHECK(fit.hazard_ratio[0] < fit.ci_high[0]);
    CHECK(fit.wald_p[0] < 0.001);
}

TEST_CASE("null covariate Wald p-values are uniform") {
    Rng rng(67);
    std::vector<double> pvalues;
    for (int sim = 0; sim < 200; ++sim) {
        const auto fit = cox::fit(noise_covariate(rng, 500));
        REQUIRE(fit.converged);
        pvalues.push_back(fit.wald_p[0]);
    }
    CHECK(testutil::ks_uniform_pvalue(pvalues) > 0.01);
}

TEST_CASE("partial likelihood is non-decreasing across Newton iterates") {
    Rng rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        const auto data = simulate_two_group(rng, 120, 3.0);
        const auto fit = cox::fit(data);
        for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
            // non-decreasing up to the evaluation noise floor
            const double noise = 1e-12 * (1.0 + std::abs(fit.loglik_trace[i - 1]));
            CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - noise);
        }
    }
}

TEST_CASE("duplicating every record leaves the estimate unchanged") {
    Rng rng(73);
    const auto data = simulate_two_group(rng, 100, 2.0);
    cox::CoxInput doubled = data;
    for (std::size_t i = 0; i < data.size(); ++i) {
        doubled.times.push_back(data.times[i]);
        doubled.events.push_back(data.events[i]);
        doubled.covariates.push_back(data.covariates[i]);
    }
    const auto fit_once = cox::fit(data);
    const auto fit_twice = cox::fit(doubled);
    CHECK(fit_twice.beta[0] == doctest::Approx(fit_once.beta[0]).epsilon(1e-7));
}

TEST_CASE("covariate rescaling by a power of two is exactly neutral") {
    Rng rng(79);
    auto data = simulate_two_group(rng, 200, 2.0);
    // continuous covariate so the rescaling is non-trivial
    for (auto& x : data.covariates) x += 0.25 * rng.next_normal();
    const auto fit = cox::fit(data);

    cox::CoxInput scaled = data;
    for (auto& x : scaled.covariates) x *= 4.0;
    const auto fit_scaled = cox::fit(scaled);

    CHECK(fit_scaled.beta[0] == fit.beta[0] / 4.0);
    CHECK(fit_scaled.wald_z[0] == fit.wald_z[0]);
    CHECK(cox::joint_cindex(fit_scaled, scaled) == cox::joint_cindex(fit, data));
}

TEST_CASE("error paths") {
    SUBCASE("no events") {
        cox::CoxInput data;
        data.num_covariates = 1;
        data.times = {1, 2, 3};
        data.events = {0, 0, 0};
        data.covariates = {0.1, 0.4, 0.9};
        CHECK_THROWS_AS(cox::fit(data), DataError);
    }
    SUBCASE("constant covariate is reported by name") {
        cox::CoxInput data;
        data.num_covariates = 2;
        data.names = {"risk", "flat"};
        data.times = {1, 2, 3, 4};
        data.events = {1, 1, 0, 1};
        data.covariates = {0.2, 7.0, 0.9, 7.0, 0.1, 7.0, 0.6, 7.0};
        try {
            cox::fit(data);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("flat") != std::string::npos);
        }
    }
    SUBCASE("collinear covariates are reported") {
        Rng rng(83);
        cox::CoxInput data;
        data.num_covariates = 2;
        data.names = {"a", "a_twice"};
        for (int i = 0; i < 40; ++i) {
            const double x = rng.next_normal();
            data.times.push_back(rng.next_uniform(1, 50));
            data.events.push_back(rng.next_double() < 0.6 ? 1 : 0);
            data.covariates.push_back(x);
            data.covariates.push_back(2.0 * x);
        }
        CHECK_THROWS_AS(cox::fit(data), NumericError);
    }
}

TEST_CASE("joint c-index") {
    SUBCASE("single covariate matches the covariate's own c-index") {
        Rng rng(89);
        const auto data = simulate_two_group(rng, 80, 2.5);
        const auto fit = cox::fit(data);
        std::vector<concordance::OutcomePair> raw(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            raw[i] = {data.times[i], data.events[i] != 0, data.covariate(i, 0), ""};
        }
        CHECK(cox::joint_cindex(fit, data) == concordance::cindex(raw));
    }
    SUBCASE("zero coefficients give exactly one half") {
        Rng rng(97);
        const auto data = simulate_two_group(rng, 50, 2.0);
        auto fit = cox::fit(data);
        fit.beta[0] = 0.0;  // forced null model: all scores tie at 0
        CHECK(cox::joint_cindex(fit, data) == 0.5);
    }
    SUBCASE("complementary signals beat both marginals") {
        // Hazard driven by the sum of two independent covariates.
        Rng rng(101);
        cox::CoxInput data;
        data.num_covariates = 2;
        data.names = {"u", "v"};
        for (int i = 0; i < 400; ++i) {
            const double u = rng.next_normal();
            const double v = rng.next_normal();
            const double rate = 0.05 * std::exp(0.8 * u + 0.8 * v);
            const double event_time = -std::log(1.0 - rng.next_double()) / rate;
            const double censor_time = rng.next_uniform(0.0, 60.0);
            data.times.push_back(std::min(event_time, censor_time));
            data.events.push_back(event_time <= censor_time ? 1 : 0);
            data.covariates.push_back(u);
            data.covariates.push_back(v);
        }
        const auto joint = cox::fit(data);
        const double joint_c = cox::joint_cindex(joint, data);

        auto marginal = [&](std::size_t col) {
            cox::CoxInput m;
            m.num_covariates = 1;
            m.times = data.times;
            m.events = data.events;
            for (std::size_t i = 0; i < data.size(); ++i) {
                m.covariates.push_back(data.covariate(i, col));
            }
            return cox::joint_cindex(cox::fit(m), m);
        };
        CHECK(joint_c > marginal(0));
        CHECK(joint_c > marginal(1));
    }
}
