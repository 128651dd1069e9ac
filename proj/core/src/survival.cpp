#include "bcrisk/survival.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "bcrisk/errors.hpp"
#include "bcrisk/quantile.hpp"

namespace bcrisk::survival {

int TimeBins::bin_of(double time_months) const {
    for (int b = 0; b < kNumBins; ++b) {
        if (time_months < edges[b + 1]) return b;
    }
    return kNumBins - 1;
}

TimeBins make_bins(std::span<const double> event_times) {
    std::vector<double> sorted(event_times.begin(), event_times.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t distinct =
        std::set<double>(sorted.begin(), sorted.end()).size();
    if (distinct < 4) {
        throw NumericError("make_bins: need at least 4 distinct event times, got " +
                           std::to_string(distinct));
    }
    TimeBins bins;
    bins.edges[0] = 0.0;
    bins.edges[1] = quantile_sorted(sorted, 0.25);
    bins.edges[2] = quantile_sorted(sorted, 0.50);
    bins.edges[3] = quantile_sorted(sorted, 0.75);
    bins.edges[4] = sorted.back() + 1.0;
    for (int i = 0; i < kNumBins; ++i) {
        if (!(bins.edges[i] < bins.edges[i + 1])) {
            throw NumericError("make_bins: degenerate bins, quartiles coincide");
        }
    }
    return bins;
}

namespace {

double clamp_hazard(double h) {
    return std::clamp(h, kHazardFloor, 1.0 - kHazardFloor);
}

}  // namespace

HazardVector hazards_from_logits(std::span<const double> logits) {
    HazardVector h;
    for (int b = 0; b < kNumBins; ++b) {
        h.hazards[b] = clamp_hazard(1.0 / (1.0 + std::exp(-logits[b])));
    }
    return h;
}

std::array<double, kNumBins> survival_curve(const HazardVector& h) {
    std::array<double, kNumBins> s{};
    double prod = 1.0;
    for (int b = 0; b < kNumBins; ++b) {
        prod *= 1.0 - clamp_hazard(h.hazards[b]);
        s[b] = prod;
    }
    return s;
}

double nll_loss(const HazardVector& h, const SurvivalLabel& label, double alpha) {
    // log S(b) accumulated directly so S(-1) = 1 falls out as an empty sum.
    double log_s_prev = 0.0;  // log S(Y-1)
    double log_s = 0.0;       // log S(Y)
    for (int b = 0; b <= label.bin; ++b) {
        if (b == label.bin) log_s_prev = log_s;
        log_s += std::log(1.0 - clamp_hazard(h.hazards[b]));
    }
    if (label.censored) {
        return (1.0 - alpha) * (-log_s);
    }
    const double log_h = std::log(clamp_hazard(h.hazards[label.bin]));
    return -log_s_prev - log_h;
}

std::array<double, kNumBins> nll_gradient(const HazardVector& h, const SurvivalLabel& label,
                                          double alpha) {
    // d(-log(1-h_u))/dz_u = h_u and d(-log h_u)/dz_u = h_u - 1 with h = sigmoid(z).
    std::array<double, kNumBins> grad{};
    if (label.censored) {
        for (int b = 0; b <= label.bin; ++b) {
            grad[b] = (1.0 - alpha) * clamp_hazard(h.hazards[b]);
        }
        return grad;
    }
    for (int b = 0; b < label.bin; ++b) {
        grad[b] = clamp_hazard(h.hazards[b]);
    }
    grad[label.bin] = clamp_hazard(h.hazards[label.bin]) - 1.0;
    return grad;
}

RiskScore risk_from_hazards(const HazardVector& h) {
    const auto s = survival_curve(h);
    double total = 0.0;
    for (double v : s) total += v;
    return RiskScore{-total};
}

RiskScore ensemble_risk(std::span<const RiskScore> fold_scores) {
    if (fold_scores.empty()) throw DataError("ensemble_risk: no fold scores");
    double sum = 0.0;
    for (const auto& r : fold_scores) sum += r.value;
    return RiskScore{sum / static_cast<double>(fold_scores.size())};
}

}  // namespace bcrisk::survival
