#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "bcrisk/concordance.hpp"
#include "bcrisk/mil.hpp"
#include "bcrisk/rng.hpp"

namespace testutil {

// Independent c-index oracle: explicit enumeration over unordered pairs,
// deliberately structured differently from the library implementation.
inline std::optional<double> brute_cindex(const std::vector<bcrisk::concordance::OutcomePair>& v) {
    double weight = 0.0;
    std::size_t permissible = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            const auto& a = v[i];
            const auto& b = v[j];
            const bcrisk::concordance::OutcomePair* riskier = nullptr;
            const bcrisk::concordance::OutcomePair* other = nullptr;
            if (a.time == b.time) {
                if (a.event == b.event) continue;  // both events or both censored: excluded
                riskier = a.event ? &a : &b;
                other = a.event ? &b : &a;
            } else {
                const auto& shorter = a.time < b.time ? a : b;
                const auto& longer = a.time < b.time ? b : a;
                if (!shorter.event) continue;  // censored first: order unknowable
                riskier = &shorter;
                other = &longer;
            }
            ++permissible;
            if (riskier->score > other->score) {
                weight += 1.0;
            } else if (riskier->score == other->score) {
                weight += 0.5;
            }
        }
    }
    if (permissible == 0) return std::nullopt;
    return weight / static_cast<double>(permissible);
}

inline std::vector<bcrisk::concordance::OutcomePair> random_outcomes(bcrisk::Rng& rng,
                                                                     std::size_t n,
                                                                     double event_rate,
                                                                     bool integer_times = false) {
    std::vector<bcrisk::concordance::OutcomePair> v(n);
    for (auto& p : v) {
        p.time = integer_times ? 1.0 + static_cast<double>(rng.next_below(8))
                               : rng.next_uniform(0.5, 120.0);
        p.event = rng.next_double() < event_rate;
        p.score = rng.next_uniform(-3.0, 3.0);
    }
    return v;
}

// Asymptotic Kolmogorov-Smirnov p-value for H0: samples ~ Uniform(0,1).
inline double ks_uniform_pvalue(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double hi = (static_cast<double>(i) + 1.0) / n - samples[i];
        const double lo = samples[i] - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
        q += term;
    }
    return std::clamp(q, 0.0, 1.0);
}

inline bcrisk::mil::FeatureBag random_bag(bcrisk::Rng& rng, std::size_t regions,
                                          std::size_t tiles_per_region, std::size_t d,
                                          double scale = 1.0) {
    bcrisk::mil::FeatureBag bag;
    bag.patient_id = "p" + std::to_string(rng.next_below(1'000'000));
    bag.feature_dim = d;
    bag.regions.resize(regions);
    for (auto& region : bag.regions) {
        region.resize(tiles_per_region * d);
        for (double& x : region) x = scale * rng.next_normal();
    }
    return bag;
}

inline bcrisk::survival::HazardVector random_hazards(bcrisk::Rng& rng) {
    bcrisk::survival::HazardVector h;
    for (double& x : h.hazards) x = rng.next_uniform(0.02, 0.98);
    return h;
}

inline std::vector<double> marker_direction(bcrisk::Rng& rng, std::size_t d, double strength) {
    std::vector<double> marker(d);
    double norm = 0.0;
    for (double& m : marker) {
        m = rng.next_normal();
        norm += m * m;
    }
    norm = std::sqrt(norm);
    for (double& m : marker) m = m / norm * strength;
    return marker;
}

// Bag whose tiles carry the marker at a continuous dose on top of isotropic
// noise. Higher dose = more of the planted risk signal.
inline bcrisk::mil::FeatureBag dosed_bag(bcrisk::Rng& rng, std::size_t regions, std::size_t d,
                                         const std::vector<double>& marker, double dose,
                                         double noise) {
    auto bag = random_bag(rng, regions, 64, d, noise);
    for (auto& region : bag.regions) {
        const std::size_t tiles = region.size() / d;
        for (std::size_t t = 0; t < tiles; ++t) {
            for (std::size_t j = 0; j < d; ++j) region[t * d + j] += dose * marker[j];
        }
    }
    return bag;
}

// Synthetic MIL cohort with a planted marker direction: each patient has a
// continuous exposure, the bag carries the marker at that dose, and the
// outcome time decreases monotonically with exposure.
struct PlantedCohort {
    std::vector<bcrisk::mil::FeatureBag> bags;
    std::vector<bcrisk::survival::SurvivalLabel> labels;
    std::vector<double> times;
    std::vector<bool> events;
    std::vector<double> exposures;
    bcrisk::survival::TimeBins bins;
};

inline PlantedCohort planted_cohort(bcrisk::Rng& rng, std::size_t n, std::size_t d = 16,
                                    double marker_strength = 3.0, double base_noise = 0.25) {
    PlantedCohort cohort;
    const auto marker = marker_direction(rng, d, marker_strength);

    for (std::size_t i = 0; i < n; ++i) {
        const double exposure = rng.next_double();
        cohort.bags.push_back(
            dosed_bag(rng, 2 + rng.next_below(2), d, marker, exposure, base_noise));
        cohort.exposures.push_back(exposure);
        cohort.times.push_back(5.0 + 95.0 * (1.0 - exposure) + rng.next_uniform(-1.0, 1.0));
        cohort.events.push_back(rng.next_double() < 0.8);
    }

    std::vector<double> event_times;
    for (std::size_t i = 0; i < n; ++i) {
        if (cohort.events[i]) event_times.push_back(cohort.times[i]);
    }
    cohort.bins = bcrisk::survival::make_bins(event_times);
    for (std::size_t i = 0; i < n; ++i) {
        cohort.labels.push_back({cohort.bins.bin_of(cohort.times[i]), !cohort.events[i]});
    }
    return cohort;
}

}  // namespace testutil
