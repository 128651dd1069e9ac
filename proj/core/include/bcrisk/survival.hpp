#pragma once

#include <array>
#include <span>

namespace bcrisk::survival {

/// Number of discrete time intervals (quartile bins of observed event times).
inline constexpr int kNumBins = 4;

/// Hazards are clamped into [kHazardFloor, 1 - kHazardFloor] before any log.
inline constexpr double kHazardFloor = 1e-7;

/// Five strictly increasing edges (months) defining four half-open intervals
/// [e0,e1), [e1,e2), [e2,e3), [e3,e4).
struct TimeBins {
    std::array<double, kNumBins + 1> edges{};

    /// Interval index for a time, clamped into {0,...,3} so any non-negative
    /// time maps to a bin even outside [e0, e4).
    int bin_of(double time_months) const;
};

/// Discrete outcome: interval index plus censoring flag (true = censored at
/// that interval, false = event observed in it).
struct SurvivalLabel {
    int bin = 0;
    bool censored = false;
};

/// Per-interval conditional event probabilities, each strictly inside (0,1).
struct HazardVector {
    std::array<double, kNumBins> hazards{};
};

/// Scalar risk; higher means higher predicted recurrence risk.
struct RiskScore {
    double value = 0.0;
};

/// Quartile bins from uncensored event times: interior edges are the
/// 25/50/75 linear-interpolation percentiles, outer edges 0 and max+1.
/// Throws NumericError if fewer than four distinct times are given or the
/// resulting edges are not strictly increasing.
TimeBins make_bins(std::span<const double> event_times);

/// Sigmoid-squashed logits, clamped away from {0,1}.
HazardVector hazards_from_logits(std::span<const double> logits);

/// S(b) = prod_{u=0..b} (1 - h_u) for b = 0..3, with the convention S(-1)=1.
std::array<double, kNumBins> survival_curve(const HazardVector& h);

/// Censoring-aware negative log-likelihood with event up-weighting:
///   censored:  (1 - alpha) * ( -log S(Y) )
///   event:     -log S(Y-1) - log h_Y      (the uncensored terms carry full
///                                          weight (1-alpha) + alpha = 1)
double nll_loss(const HazardVector& h, const SurvivalLabel& label, double alpha);

/// Analytic gradient of nll_loss with respect to the hazard *logits*.
std::array<double, kNumBins> nll_gradient(const HazardVector& h, const SurvivalLabel& label,
                                          double alpha);

/// r = -sum_b S(b). Strictly increasing in every hazard component.
RiskScore risk_from_hazards(const HazardVector& h);

/// Arithmetic mean of per-fold scores. Throws DataError on an empty list.
RiskScore ensemble_risk(std::span<const RiskScore> fold_scores);

}  // namespace bcrisk::survival
