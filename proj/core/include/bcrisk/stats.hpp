#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bcrisk/concordance.hpp"

namespace bcrisk::stats {

struct BootstrapConfig {
    std::size_t resamples = 4000;
    std::uint64_t seed = 42;
    bool two_sided = true;
    /// Replace random resampling by exhaustive enumeration of all ordered
    /// event-stratified index draws (only feasible for tiny cohorts).
    bool exhaustive = false;
    /// Worker threads; results are bit-identical for any worker count
    /// because each resample derives its generator from its own index.
    unsigned workers = 1;
    /// Audit hook: invoked with (resample index, accepted patient indices)
    /// for every resample. May be called concurrently when workers > 1.
    std::function<void(std::size_t, std::span<const std::size_t>)> resample_observer;
};

struct CindexCi {
    double estimate = 0.0;  // c-index on the full sample
    double ci_low = 0.0;    // 2.5 percentile of the resample distribution
    double ci_high = 0.0;   // 97.5 percentile
    std::size_t redraws = 0;  // resamples redrawn because c-index was undefined
};

struct ComparisonResult {
    double delta = 0.0;  // cindex_A - cindex_B on the full sample
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p = 1.0;
    double q = 1.0;  // FDR-adjusted; equals p until a family adjustment runs
};

/// C-index with a 95% percentile CI from event-stratified bootstrapping:
/// every resample draws events and censored patients separately with
/// replacement, preserving the original count of each stratum. Resamples on
/// which the c-index is undefined are redrawn (the count is reported).
CindexCi bootstrap_ci(std::span<const concordance::OutcomePair> pairs, const BootstrapConfig& cfg);

/// Paired bootstrap comparison of two models scoring the same patients.
/// Each resample draws one stratified index set and applies it to both
/// models; the two-sided p-value uses the (count+1)/(B+1) small-sample
/// correction. Throws DataError if times/events differ between A and B.
ComparisonResult paired_compare(std::span<const concordance::OutcomePair> pairs_a,
                                std::span<const concordance::OutcomePair> pairs_b,
                                const BootstrapConfig& cfg);

/// Benjamini-Hochberg step-up adjustment, returned in input order.
/// Idempotent: bh_adjust(bh_adjust(p)) == bh_adjust(p).
std::vector<double> bh_adjust(std::span<const double> p_values);

}  // namespace bcrisk::stats
