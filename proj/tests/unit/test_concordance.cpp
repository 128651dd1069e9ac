#include <doctest.h>

#include "bcrisk/concordance.hpp"
#include "bcrisk/errors.hpp"
#include "helpers.hpp"

using namespace bcrisk;
using concordance::OutcomePair;

TEST_CASE("perfect and anti-perfect rankings") {
    std::vector<OutcomePair> v = {
        {1, true, 4, ""}, {2, true, 3, ""}, {3, true, 2, ""}, {4, true, 1, ""}};
    CHECK(concordance::cindex(v) == 1.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i].score = static_cast<double>(i + 1);
    CHECK(concordance::cindex(v) == 0.0);
}

TEST_CASE("small censored fixture matches the exhaustive oracle") {
    Rng rng(23);
    const auto v = testutil::random_outcomes(rng, 6, 0.5);
    const auto oracle = testutil::brute_cindex(v);
    REQUIRE(oracle.has_value());
    CHECK(concordance::cindex(v) == *oracle);
}

TEST_CASE("exact agreement with the brute-force oracle on 200 random datasets") {
    Rng rng(29);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next_below(49);
        const bool ties = rng.next_double() < 0.5;
        const auto v = testutil::random_outcomes(rng, n, rng.next_uniform(0.2, 0.9), ties);
        const auto oracle = testutil::brute_cindex(v);
        if (!oracle) {
            CHECK_THROWS_AS(concordance::cindex(v), NumericError);
            continue;
        }
        CHECK(concordance::cindex(v) == *oracle);
        ++checked;
    }
    CHECK(checked > 150);  // the generator rarely yields all-censored sets
}

TEST_CASE("no permissible pairs is an error") {
    const std::vector<OutcomePair> all_censored = {
        {1, false, 0.3, ""}, {2, false, 0.1, ""}, {3, false, 0.9, ""}};
    CHECK_THROWS_AS(concordance::cindex(all_censored), NumericError);
    const std::vector<OutcomePair> single = {{1, true, 0.5, ""}};
    CHECK_THROWS_AS(concordance::cindex(single), NumericError);
}

TEST_CASE("tied event times follow the one-event convention") {
    // Same time, exactly one event: permissible, event expected riskier.
    std::vector<OutcomePair> v = {{5, true, 2.0, ""}, {5, false, 1.0, ""}};
    CHECK(concordance::cindex(v) == 1.0);
    v[0].score = 0.5;
    CHECK(concordance::cindex(v) == 0.0);
    // Both events at the same time: excluded.
    const std::vector<OutcomePair> both = {
        {5, true, 2.0, ""}, {5, true, 1.0, ""}, {9, false, 0.0, ""}};
    CHECK(concordance::permissible_pairs(both) == 2);  // each event vs the later censored
}

TEST_CASE("invariance under strictly increasing score transforms") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        auto v = testutil::random_outcomes(rng, 20, 0.6);
        if (!testutil::brute_cindex(v)) continue;
        const double before = concordance::cindex(v);
        for (auto& p : v) p.score = std::exp(0.7 * p.score) + 3.0;
        CHECK(concordance::cindex(v) == before);
    }
}

TEST_CASE("score negation reflects c-index around one half") {
    Rng rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        auto v = testutil::random_outcomes(rng, 15, 0.7);
        if (!testutil::brute_cindex(v)) continue;
        const double forward = concordance::cindex(v);
        for (auto& p : v) p.score = -p.score;
        CHECK(concordance::cindex(v) + forward == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("grouped evaluation") {
    SUBCASE("single group matches the pooled c-index") {
        Rng rng(41);
        auto v = testutil::random_outcomes(rng, 12, 0.6);
        for (auto& p : v) p.group = "only";
        const auto by_group = concordance::cindex_by_group(v);
        REQUIRE(by_group.size() == 1);
        REQUIRE(by_group.at("only").has_value());
        CHECK(*by_group.at("only") == concordance::cindex(v));
    }
    SUBCASE("all-censored group reports undefined instead of failing") {
        std::vector<OutcomePair> v = {
            {1, true, 1.0, "g2"}, {2, false, 0.5, "g2"},
            {3, false, 0.2, "g1"}, {4, false, 0.9, "g1"},  // grade 1: all censored
        };
        const auto by_group = concordance::cindex_by_group(v);
        CHECK_FALSE(by_group.at("g1").has_value());
        CHECK(by_group.at("g2").has_value());
    }
    SUBCASE("planted opposite rankings per group") {
        std::vector<OutcomePair> v;
        for (int i = 0; i < 5; ++i) {
            v.push_back({static_cast<double>(i + 1), true, 10.0 - i, "asc"});
            v.push_back({static_cast<double>(i + 1), true, static_cast<double>(i), "desc"});
        }
        const auto by_group = concordance::cindex_by_group(v);
        CHECK(*by_group.at("asc") == 1.0);
        CHECK(*by_group.at("desc") == 0.0);
    }
}
